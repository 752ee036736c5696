#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fmm/backend.hpp"
#include "fmm/expansion.hpp"
#include "fmm/geometry.hpp"
#include "fmm/types.hpp"

namespace fmm {

struct FmmConfig {
  double theta = 0.5;
  int n_levels = 4;
  double tol = 1e-6;
  Kernel kernel = Kernel::harmonic;
  PRule p_rule = PRule::table;
  double p_calibration = 1.0;
  int p_override = 0;  // > 0 pins the expansion order directly
  BackendKind backend = BackendKind::serial;
  ThrottleSettings throttle;
  int worker_threads = 1;
  int task_split_level = 2;  // downward pass fans out below this level
  Smoother smoother;

  int expansion_order() const;
};

// Wall-time decomposition of one evaluation. t_q collects everything
// outside the M2L downward pass and P2P. cpu_wait > 0 means the far field
// finished first and the CPU sat on the backend join.
struct PhaseTimings {
  double t_partition = 0;
  double t_p2m = 0;
  double t_upward = 0;
  double t_m2l = 0;
  double t_p2p = 0;
  double t_q = 0;
  double t_total = 0;
  double cpu_wait = 0;
};

struct WorkCounters {
  std::uint64_t p2p_pairs = 0;
  std::uint64_t m2l_ops = 0;
  std::uint64_t p2m_points = 0;
  std::uint64_t l2p_points = 0;
};

struct EvalResult {
  std::vector<cplx> potentials;  // original eval order
  PhaseTimings timings;
  WorkCounters counters;
  int p = 0;
};

// Closed-form operation-count estimates for a uniform distribution in the
// unit square (diagnostics and scaling tests).
struct CostEstimate {
  double c_p2p = 0;
  double c_m2l = 0;
  double c_m2m = 0;
  double c_p2m = 0;
};
CostEstimate estimate_cost(double n, int n_levels, double theta, int p);

// Per-box expansions for every pyramid level. Boxes without sources (or,
// for locals, without evals in their subtree) keep empty coefficient
// vectors.
struct ExpansionPyramid {
  std::vector<std::vector<Expansion>> levels;
};

// Finest-level P2M then serial M2M up the tree.
ExpansionPyramid upward_pass(const Pyramid& pyr, const std::vector<cplx>& src_z_perm,
                             const std::vector<cplx>& src_m_perm, Kernel kernel, int p,
                             int threads, WorkCounters* counters = nullptr);

// M2L across every level plus L2L down to the finest boxes. Fans out into
// one independent task per box at task_split_level; tasks share no mutable
// state and each box accumulates in a fixed order, so the result is
// bitwise independent of the thread count and split level.
ExpansionPyramid downward_pass(const Pyramid& pyr, const Connectivity& conn,
                               const ExpansionPyramid& outgoing, int p, int task_split_level,
                               int threads, WorkCounters* counters = nullptr);

// Synchronous near-field convenience wrapper: permutes, runs the backend,
// and returns potentials in the original eval order.
std::vector<cplx> nearfield_eval(NearFieldBackend& backend, const Pyramid& pyr,
                                 const Connectivity& conn, const SourceSet& sources,
                                 const EvalSet& evals, Kernel kernel, const Smoother& smoother);

class FmmEngine {
 public:
  explicit FmmEngine(FmmConfig cfg);

  // Full pipeline: partition, upward pass, concurrent downward + near field,
  // assembly. One evaluation in flight per engine instance.
  EvalResult evaluate(const SourceSet& sources, const EvalSet& evals);

  const FmmConfig& config() const { return cfg_; }
  void set_config(const FmmConfig& cfg);

  // Invoked at the end of every evaluate(); the callback may call
  // set_config to steer the next evaluation (autotuning hook).
  void set_observer(std::function<void(FmmEngine&, const EvalResult&)> cb) {
    observer_ = std::move(cb);
  }
  bool backend_concurrent() const { return backend_->concurrent(); }

 private:
  FmmConfig cfg_;
  std::unique_ptr<NearFieldBackend> backend_;
  BackendKind backend_kind_;
  std::function<void(FmmEngine&, const EvalResult&)> observer_;
};

}  // namespace fmm
