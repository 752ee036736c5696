#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fmm/types.hpp"

namespace fmm {

enum class TunerKind { none, at1, at2, at3a, at3b };

TunerKind tuner_from_string(const std::string& s);
const char* to_string(TunerKind k);

// Minimum runtime over the most recent `window` entries; window clamps to
// the available history.
double filter_noise(const std::vector<double>& history, int window);

struct Measurement {
  int iteration = 0;
  double time = 0.0;      // seconds, > 0
  double cpu_wait = 0.0;  // seconds the CPU waited on the backend join
  bool has_wait = false;  // false for synchronous (CPU-only) backends
};

struct Params {
  double theta = 0.5;
  int n_levels = 4;
};

struct ControllerConfig {
  double theta_min = 0.25;
  double theta_max = 0.8;
  int nl_min = 1;
  int nl_max = 10;
  double base_thetastep = 0.01;
  int theta_every = 2;   // theta probe cadence, iterations
  int nl_every = 10;     // n_levels probe cadence; wins when both fall due
  int filter_window = 3;
  int init_fiblength = 3;
  int max_fiblength = 12;  // longest Fibonacci cycle; keeps small probes frequent
  double cap = 0.1;  // at3b n_levels probe budget as a fraction of runtime; 0 disables probing
};

enum class MoveKind { none, theta, nlevels };

// What the controller did with the measurement it was just fed.
struct StepEvent {
  MoveKind proposed = MoveKind::none;  // move issued this step
  int move_dir = 0;                    // +1/-1 for the issued move
  int accepted = -1;                   // verdict on the pending probe: -1 none, 0 rejected, 1 accepted
  bool bound_rejected = false;         // a move was due but left the bounds
  double thetastep_mult = 1.0;         // Fibonacci multiplier in effect
};

// Exact update lines of the n_levels cost rescheduling: accumulates the
// misstep cost and converts the budget shortfall into an iteration count.
struct At3bSchedule {
  double cost_accum;  // new per-direction accumulated cost
  double time_to_next;
  double interval;  // iterations until the next probe in this direction
};
At3bSchedule at3b_reschedule(double dir_cost_accum, double cost, double cap, double basetime,
                             int iteration);

// Online extremum control of (theta, n_levels), one step per FMM iteration.
// A probe issued at step i is judged against the measurement fed at step
// i+1; a worsened filtered time reverts the parameters to their previous
// values. Comparisons use filter_noise over the samples gathered at one
// parameter configuration.
class Controller {
 public:
  Controller(TunerKind kind, ControllerConfig cfg, Params initial, std::uint64_t seed);

  // Feed the measurement taken at params(); returns the parameters to use
  // for the next iteration.
  Params step(const Measurement& m);

  Params params() const { return cur_; }
  // Pending probe resolved to the last accepted configuration.
  Params settled_params() const { return pending_ == MoveKind::none ? cur_ : prev_; }
  TunerKind kind() const { return kind_; }
  const ControllerConfig& config() const { return cfg_; }
  const StepEvent& last_event() const { return event_; }

  double basetime() const { return basetime_; }
  double upcost() const { return upcost_; }
  double downcost() const { return downcost_; }
  double max_probe_cost() const { return max_probe_cost_; }

 private:
  void on_reject(double cost, int iteration);
  bool propose_nl(const Measurement& m);
  bool propose_theta();
  void advance_fib();

  TunerKind kind_;
  ControllerConfig cfg_;
  Params cur_, prev_;
  std::mt19937_64 rng_;
  int iter_ = 0;

  int thetadir_ = +1, nldir_ = +1;
  int fibcount_ = 1, fiblength_ = 3;
  double thetastep_mult_ = 1.0;
  MoveKind pending_ = MoveKind::none;
  int pending_dir_ = 0;

  std::vector<double> cur_hist_, prev_hist_;
  double prev_eff_ = 0.0;
  bool have_prev_eff_ = false;

  double basetime_ = 0.0, upcost_ = 0.0, downcost_ = 0.0;
  double max_probe_cost_ = 0.0;
  long next_up_ = 0, next_down_ = 0;
  bool nl_toggle_up_ = true;

  StepEvent event_;
};

// Synthetic runtime landscape over (theta, n_levels): the minimum over a set
// of quadratic basins, a saw-tooth ripple in theta, a discrete V in
// n_levels, additive positive noise, optional drift of the basin centers,
// and an optional mid-run swap of basin depths.
struct Basin {
  double center = 0.5;
  double curvature = 50.0;
  double offset = 0.0;
  double offset_after_switch = 0.0;
};

struct WorkloadOracle {
  std::vector<Basin> basins{Basin{}};
  double nl_optimum = 5.0;
  double nl_weight = 0.05;
  double saw_amp = 0.0;
  double saw_period = 0.03;
  double noise_amp = 0.0;
  double drift_rate = 0.0;   // per-iteration shift of every basin center
  double base_time = 1.0;
  int switch_iteration = -1;  // < 0: offsets never switch
  bool concurrent_mode = false;
  double wait_scale = 0.02;

  double time(double theta, int n_levels, int iteration, double noise_u) const;
  Measurement measure(double theta, int n_levels, int iteration, std::mt19937_64& rng) const;
  double optimum_theta(int iteration) const;
};

struct TraceRow {
  int iteration = 0;
  double theta = 0.0;
  int n_levels = 0;
  MoveKind proposed = MoveKind::none;
  int move_dir = 0;
  int accepted = -1;
  double time = 0.0;
  double cpu_wait = 0.0;
  double thetastep_mult = 1.0;
};

struct Trajectory {
  std::vector<TraceRow> rows;
};

// Feeds oracle measurements into the controller for `iterations` steps.
// Deterministic given the seed (oracle noise) and the controller's own seed.
Trajectory run_controller(Controller& controller, const WorkloadOracle& oracle, int iterations,
                          std::uint64_t seed);

}  // namespace fmm
