#include "fmm/autotune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fmm {

TunerKind tuner_from_string(const std::string& s) {
  if (s == "none") return TunerKind::none;
  if (s == "at1") return TunerKind::at1;
  if (s == "at2") return TunerKind::at2;
  if (s == "at3a") return TunerKind::at3a;
  if (s == "at3b") return TunerKind::at3b;
  throw InvalidParameter("unknown tuner: " + s);
}

const char* to_string(TunerKind k) {
  switch (k) {
    case TunerKind::none: return "none";
    case TunerKind::at1: return "at1";
    case TunerKind::at2: return "at2";
    case TunerKind::at3a: return "at3a";
    case TunerKind::at3b: return "at3b";
  }
  return "?";
}

double filter_noise(const std::vector<double>& history, int window) {
  if (window < 1) throw InvalidParameter("filter_noise: window must be >= 1");
  if (history.empty()) throw NoMeasurement("filter_noise: empty history");
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(window), history.size());
  double m = history[history.size() - n];
  for (std::size_t i = history.size() - n + 1; i < history.size(); ++i)
    m = std::min(m, history[i]);
  return m;
}

At3bSchedule at3b_reschedule(double dir_cost_accum, double cost, double cap, double basetime,
                             int iteration) {
  At3bSchedule s;
  s.cost_accum = dir_cost_accum + cost;
  s.time_to_next = (s.cost_accum + cost) / cap - basetime;
  if (s.time_to_next < 0.0) s.time_to_next = 0.0;
  s.interval = basetime > 0.0 ? s.time_to_next * iteration / basetime : 0.0;
  return s;
}

namespace {

double fib(int n) {
  double a = 1.0, b = 1.0;  // fib(1), fib(2)
  for (int i = 2; i < n; ++i) {
    const double c = a + b;
    a = b;
    b = c;
  }
  return n <= 2 ? 1.0 : b;
}

}  // namespace

Controller::Controller(TunerKind kind, ControllerConfig cfg, Params initial, std::uint64_t seed)
    : kind_(kind), cfg_(cfg), rng_(seed) {
  if (cfg_.cap < 0.0) throw InvalidParameter("controller: cap must be >= 0");
  if (!(cfg_.base_thetastep > 0.0)) throw InvalidParameter("controller: thetastep must be > 0");
  if (cfg_.theta_every < 1 || cfg_.nl_every < 1)
    throw InvalidParameter("controller: move cadences must be >= 1");
  if (cfg_.filter_window < 1) throw InvalidParameter("controller: filter window must be >= 1");
  if (!(cfg_.theta_min < cfg_.theta_max) || cfg_.nl_min > cfg_.nl_max)
    throw InvalidParameter("controller: empty parameter bounds");
  fiblength_ = std::max(1, cfg_.init_fiblength);
  cur_.theta = std::clamp(initial.theta, cfg_.theta_min, cfg_.theta_max);
  cur_.n_levels = std::clamp(initial.n_levels, cfg_.nl_min, cfg_.nl_max);
  prev_ = cur_;
}

void Controller::advance_fib() {
  if (fibcount_ < fiblength_) {
    ++fibcount_;
    thetastep_mult_ = fib(fibcount_);
  } else {
    fibcount_ = 1;
    thetastep_mult_ = 1.0;
    fiblength_ = std::min(fiblength_ + 1, cfg_.max_fiblength);  // grow sequence
  }
}

void Controller::on_reject(double cost, int iteration) {
  // Only reached when a probe is pending; updates the probe-kind state.
  if (pending_ == MoveKind::theta) {
    if (kind_ != TunerKind::at1) {
      advance_fib();
      thetadir_ = -thetadir_;
    }
  } else if (pending_ == MoveKind::nlevels) {
    switch (kind_) {
      case TunerKind::at2:
      case TunerKind::at3a:
        nldir_ = -nldir_;
        break;
      case TunerKind::at3b: {
        max_probe_cost_ = std::max(max_probe_cost_, cost);
        if (pending_dir_ > 0) {
          const At3bSchedule s = at3b_reschedule(upcost_, cost, cfg_.cap, basetime_, iteration);
          upcost_ = s.cost_accum;
          next_up_ = iteration + static_cast<long>(std::ceil(s.interval));
        } else {
          const At3bSchedule s = at3b_reschedule(downcost_, cost, cfg_.cap, basetime_, iteration);
          downcost_ = s.cost_accum;
          next_down_ = iteration + static_cast<long>(std::ceil(s.interval));
        }
        break;
      }
      default:
        break;
    }
  }
}

bool Controller::propose_theta() {
  const double step = thetastep_mult_ * cfg_.base_thetastep;
  const int dir = kind_ == TunerKind::at1 ? ((rng_() & 1u) ? +1 : -1) : thetadir_;
  double nt = cur_.theta + dir * step;
  if (nt < cfg_.theta_min || nt > cfg_.theta_max) {
    event_.bound_rejected = true;
    if (kind_ == TunerKind::at1) {
      nt = std::clamp(nt, cfg_.theta_min, cfg_.theta_max);
      if (nt == cur_.theta) return false;
    } else {
      // Treated as a rejected move minus the cost accounting: the cycle
      // advances, otherwise an escalated step that exits the bounds on both
      // sides would never shrink again.
      advance_fib();
      thetadir_ = -thetadir_;
      return false;
    }
  }
  prev_hist_ = cur_hist_;
  cur_hist_.clear();
  cur_.theta = nt;
  pending_ = MoveKind::theta;
  pending_dir_ = dir;
  event_.proposed = MoveKind::theta;
  event_.move_dir = dir;
  return true;
}

bool Controller::propose_nl(const Measurement& m) {
  int dir = 0;
  switch (kind_) {
    case TunerKind::at1:
      dir = (rng_() & 1u) ? +1 : -1;
      break;
    case TunerKind::at2:
      dir = nldir_;
      break;
    case TunerKind::at3a:
      // Load-balance driven when a wait signal exists; AT2's directed walk
      // otherwise (CPU-only runs behave exactly like AT2).
      dir = m.has_wait ? (m.cpu_wait > 0.0 ? +1 : -1) : nldir_;
      break;
    case TunerKind::at3b: {
      if (cfg_.cap == 0.0) return false;
      // Budget gate: total misstep cost stays within cap of the accumulated
      // accepted runtime (plus at most one probe).
      if (upcost_ + downcost_ > cfg_.cap * basetime_) return false;
      const bool up_ok = iter_ >= next_up_ && cur_.n_levels + 1 <= cfg_.nl_max;
      const bool dn_ok = iter_ >= next_down_ && cur_.n_levels - 1 >= cfg_.nl_min;
      if (!up_ok && !dn_ok) return false;
      if (up_ok && dn_ok) {
        dir = nl_toggle_up_ ? +1 : -1;
        nl_toggle_up_ = !nl_toggle_up_;
      } else {
        dir = up_ok ? +1 : -1;
      }
      break;
    }
    default:
      return false;
  }
  const int nn = cur_.n_levels + dir;
  if (nn < cfg_.nl_min || nn > cfg_.nl_max) {
    event_.bound_rejected = true;
    if (kind_ == TunerKind::at2 || (kind_ == TunerKind::at3a && !m.has_wait)) nldir_ = -nldir_;
    return false;
  }
  prev_hist_ = cur_hist_;
  cur_hist_.clear();
  cur_.n_levels = nn;
  pending_ = MoveKind::nlevels;
  pending_dir_ = dir;
  event_.proposed = MoveKind::nlevels;
  event_.move_dir = dir;
  return true;
}

Params Controller::step(const Measurement& m) {
  if (!(m.time > 0.0)) throw InvalidInput("controller: measurement time must be > 0");
  ++iter_;
  event_ = StepEvent{};
  event_.thetastep_mult = thetastep_mult_;
  if (kind_ == TunerKind::none) return cur_;

  cur_hist_.push_back(m.time);
  if (static_cast<int>(cur_hist_.size()) > cfg_.filter_window)
    cur_hist_.erase(cur_hist_.begin());
  const double eff = filter_noise(cur_hist_, cfg_.filter_window);

  if (have_prev_eff_ && eff > prev_eff_) {
    // Worse than the previous iteration: return the previous iteration's
    // parameters (a pending probe reverts; without one this bounces back to
    // whatever ran one step earlier) and skip this step's move turn.
    event_.accepted = pending_ != MoveKind::none ? 0 : -1;
    if (pending_ != MoveKind::none) on_reject(eff - prev_eff_, iter_);
    std::swap(cur_, prev_);
    std::swap(cur_hist_, prev_hist_);
    prev_eff_ = eff;
    pending_ = MoveKind::none;
    return cur_;
  }

  if (pending_ != MoveKind::none) event_.accepted = 1;
  pending_ = MoveKind::none;
  if (kind_ == TunerKind::at3b) basetime_ += m.time;

  // Rotate the previous-iteration register to this iteration's config; a
  // proposal below re-points cur_ at the probe.
  prev_ = cur_;
  prev_eff_ = eff;
  have_prev_eff_ = true;

  bool moved = false;
  if (iter_ % cfg_.nl_every == 0) {
    moved = propose_nl(m);  // n_levels turns take precedence over theta turns
  } else if (iter_ % cfg_.theta_every == 0) {
    moved = propose_theta();
  }
  if (!moved) prev_hist_ = cur_hist_;
  return cur_;
}

double WorkloadOracle::time(double theta, int n_levels, int iteration, double noise_u) const {
  double theta_part = std::numeric_limits<double>::infinity();
  for (const Basin& b : basins) {
    const double c = b.center + drift_rate * iteration;
    const double off =
        (switch_iteration >= 0 && iteration >= switch_iteration) ? b.offset_after_switch
                                                                 : b.offset;
    theta_part = std::min(theta_part, off + b.curvature * (theta - c) * (theta - c));
  }
  const double nl_part = nl_weight * (n_levels - nl_optimum) * (n_levels - nl_optimum);
  double saw = 0.0;
  if (saw_amp > 0.0) {
    double fr = theta / saw_period;
    fr -= std::floor(fr);
    saw = saw_amp * std::abs(2.0 * fr - 1.0);
  }
  const double t = base_time + theta_part + nl_part + saw + noise_amp * noise_u;
  return std::max(t, 1e-9);
}

Measurement WorkloadOracle::measure(double theta, int n_levels, int iteration,
                                    std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = noise_amp > 0.0 ? uni(rng) : 0.0;
  Measurement m;
  m.iteration = iteration;
  m.time = time(theta, n_levels, iteration, u);
  m.has_wait = concurrent_mode;
  m.cpu_wait =
      concurrent_mode ? wait_scale * std::max(0.0, nl_optimum - n_levels) : 0.0;
  return m;
}

double WorkloadOracle::optimum_theta(int iteration) const {
  double best_off = std::numeric_limits<double>::infinity();
  double best_center = 0.5;
  for (const Basin& b : basins) {
    const double off =
        (switch_iteration >= 0 && iteration >= switch_iteration) ? b.offset_after_switch
                                                                 : b.offset;
    if (off < best_off) {
      best_off = off;
      best_center = b.center + drift_rate * iteration;
    }
  }
  return best_center;
}

Trajectory run_controller(Controller& controller, const WorkloadOracle& oracle, int iterations,
                          std::uint64_t seed) {
  if (iterations < 1) throw InvalidParameter("run_controller: iterations must be >= 1");
  std::mt19937_64 rng(seed);
  Trajectory tr;
  tr.rows.reserve(static_cast<std::size_t>(iterations));
  for (int i = 1; i <= iterations; ++i) {
    const Params p = controller.params();
    Measurement m = oracle.measure(p.theta, p.n_levels, i, rng);
    m.iteration = i;
    controller.step(m);
    const StepEvent& e = controller.last_event();
    tr.rows.push_back(TraceRow{i, p.theta, p.n_levels, e.proposed, e.move_dir, e.accepted,
                               m.time, m.cpu_wait, e.thetastep_mult});
  }
  return tr;
}

}  // namespace fmm
