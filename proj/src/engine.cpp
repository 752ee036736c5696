#include "fmm/engine.hpp"

#include <chrono>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fmm {

namespace {
using clock = std::chrono::steady_clock;
double since(clock::time_point t0) {
  return std::chrono::duration<double>(clock::now() - t0).count();
}
}  // namespace

int FmmConfig::expansion_order() const {
  if (p_override > 0) return std::min(p_override, kMaxOrder);
  return choose_p(p_rule, tol, theta, p_calibration);
}

CostEstimate estimate_cost(double n, int n_levels, double theta, int p) {
  if (!(n > 0) || n_levels < 1 || !(theta > 0.0 && theta < 1.0) || p < 1)
    throw InvalidParameter("estimate_cost: invalid parameters");
  const double nf = std::pow(4.0, n_levels - 1);
  const double geom = M_PI * std::pow((1.0 + theta) / theta, 2.0);
  CostEstimate c;
  c.c_p2p = n * n / (2.0 * nf) * geom;
  c.c_m2l = 1.5 * nf * p * p * geom;
  c.c_m2m = (4.0 / 3.0) * nf * p * p;
  c.c_p2m = n * p;
  return c;
}

ExpansionPyramid upward_pass(const Pyramid& pyr, const std::vector<cplx>& src_z_perm,
                             const std::vector<cplx>& src_m_perm, Kernel kernel, int p,
                             int threads, WorkCounters* counters) {
  ExpansionPyramid out;
  out.levels.resize(pyr.n_levels);
  for (int l = 0; l < pyr.n_levels; ++l) out.levels[l].resize(pyr.levels[l].size());

  // P2M at the finest level only.
  const auto& fine = pyr.finest();
  auto& fexp = out.levels[pyr.finest_level()];
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(fine.size()); ++i) {
    const MBox& b = fine[i];
    if (b.n_points() == 0) continue;
    fexp[i] = p2m(b.center,
                  std::span<const cplx>(src_z_perm.data() + b.point_begin, b.n_points()),
                  std::span<const cplx>(src_m_perm.data() + b.point_begin, b.n_points()),
                  kernel, p);
  }
  if (counters) counters->p2m_points += src_z_perm.size();

  // Serial M2M chain; a parent's expansion is the sum of its translated
  // children.
  for (int l = pyr.finest_level() - 1; l >= 0; --l) {
    const auto& boxes = pyr.levels[l];
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const MBox& b = boxes[i];
      if (b.n_points() == 0) continue;
      Expansion& acc = out.levels[l][i];
      acc.center = b.center;
      acc.kind = Expansion::Kind::outgoing;
      acc.kernel = kernel;
      acc.coeffs.assign(static_cast<std::size_t>(p) + 1, cplx(0, 0));
      for (std::size_t c = 4 * i; c < 4 * i + 4; ++c) {
        const Expansion& child = out.levels[l + 1][c];
        if (child.coeffs.empty()) continue;
        Expansion shifted = m2m(child, b.center);
        for (int k = 0; k <= p; ++k) acc.coeffs[k] += shifted.coeffs[k];
      }
    }
  }
  return out;
}

namespace {

struct DownwardCtx {
  const Pyramid& pyr;
  const Connectivity& conn;
  const ExpansionPyramid& out;
  ExpansionPyramid& loc;
  Kernel kernel;
  int p;
};

// Accumulation order is fixed (parent shift first, then weak partners in
// ascending box order) so results do not depend on scheduling.
void process_box(DownwardCtx& ctx, int l, std::uint32_t i, std::uint64_t& m2l_count) {
  const MBox& b = ctx.pyr.levels[l][i];
  if (b.n_evals() == 0) return;
  Expansion& local = ctx.loc.levels[l][i];
  local.center = b.center;
  local.kind = Expansion::Kind::ingoing;
  local.kernel = ctx.kernel;
  local.coeffs.assign(static_cast<std::size_t>(ctx.p) + 1, cplx(0, 0));
  if (l >= 2) {
    const Expansion& parent = ctx.loc.levels[l - 1][i / 4];
    if (!parent.coeffs.empty()) l2l_add(parent, local);
  }
  for (std::uint32_t w : ctx.conn.levels[l].weak[i]) {
    const Expansion& src = ctx.out.levels[l][w];
    if (src.coeffs.empty()) continue;
    m2l_add(src, local);
    ++m2l_count;
  }
}

void process_subtree(DownwardCtx& ctx, int l, std::uint32_t i, std::uint64_t& m2l_count) {
  if (l + 1 >= ctx.pyr.n_levels) return;
  if (ctx.pyr.levels[l][i].n_evals() == 0) return;
  for (std::uint32_t c = 4 * i; c < 4 * i + 4; ++c) {
    process_box(ctx, l + 1, c, m2l_count);
    process_subtree(ctx, l + 1, c, m2l_count);
  }
}

}  // namespace

ExpansionPyramid downward_pass(const Pyramid& pyr, const Connectivity& conn,
                               const ExpansionPyramid& outgoing, int p, int task_split_level,
                               int threads, WorkCounters* counters) {
  ExpansionPyramid loc;
  loc.levels.resize(pyr.n_levels);
  for (int l = 0; l < pyr.n_levels; ++l) loc.levels[l].resize(pyr.levels[l].size());

  DownwardCtx ctx{pyr, conn, outgoing, loc, outgoing.levels[0][0].kernel, p};
  if (outgoing.levels[0][0].coeffs.empty()) ctx.kernel = Kernel::harmonic;

  const int split = std::max(0, std::min(task_split_level, pyr.n_levels - 1));
  std::uint64_t m2l_total = 0;

  // Breadth-first serial walk down to the fan-out level.
  for (int l = 1; l <= split; ++l)
    for (std::uint32_t i = 0; i < pyr.levels[l].size(); ++i) process_box(ctx, l, i, m2l_total);

  const std::uint32_t n_split = static_cast<std::uint32_t>(pyr.levels[split].size());
  if (threads > 1 && split < pyr.n_levels - 1) {
#ifdef _OPENMP
#pragma omp parallel num_threads(threads)
#pragma omp single
    {
      for (std::uint32_t i = 0; i < n_split; ++i) {
#pragma omp task firstprivate(i)
        {
          std::uint64_t cnt = 0;
          process_subtree(ctx, split, i, cnt);
#pragma omp atomic
          m2l_total += cnt;
        }
      }
    }
#else
    for (std::uint32_t i = 0; i < n_split; ++i) process_subtree(ctx, split, i, m2l_total);
#endif
  } else {
    for (std::uint32_t i = 0; i < n_split; ++i) process_subtree(ctx, split, i, m2l_total);
  }

  if (counters) counters->m2l_ops += m2l_total;
  return loc;
}

std::vector<cplx> nearfield_eval(NearFieldBackend& backend, const Pyramid& pyr,
                                 const Connectivity& conn, const SourceSet& sources,
                                 const EvalSet& evals, Kernel kernel, const Smoother& smoother) {
  std::vector<cplx> src_z_p(sources.size()), src_m_p(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    src_z_p[i] = sources.z[pyr.perm[i]];
    src_m_p[i] = sources.m[pyr.perm[i]];
  }
  std::vector<cplx> eval_y_p(evals.size());
  std::vector<std::int64_t> eval_sid_p;
  if (!evals.source_id.empty()) eval_sid_p.resize(evals.size());
  for (std::size_t i = 0; i < evals.size(); ++i) {
    eval_y_p[i] = evals.y[pyr.eval_perm[i]];
    if (!eval_sid_p.empty()) eval_sid_p[i] = evals.source_id[pyr.eval_perm[i]];
  }
  NearFieldJob job{&pyr, &conn.finest(), &src_z_p, &src_m_p, &eval_y_p, &eval_sid_p,
                   kernel, smoother, 1};
  std::vector<cplx> near;
  backend.launch(job, near);
  backend.finish();
  std::vector<cplx> out(evals.size());
  for (std::size_t i = 0; i < evals.size(); ++i) out[pyr.eval_perm[i]] = near[i];
  return out;
}

FmmEngine::FmmEngine(FmmConfig cfg) : cfg_(cfg), backend_kind_(cfg.backend) {
  backend_ = make_backend(cfg_.backend, cfg_.throttle);
}

void FmmEngine::set_config(const FmmConfig& cfg) {
  if (cfg.backend != backend_kind_) {
    backend_ = make_backend(cfg.backend, cfg.throttle);
    backend_kind_ = cfg.backend;
  }
  cfg_ = cfg;
}

EvalResult FmmEngine::evaluate(const SourceSet& sources, const EvalSet& evals) {
  if (!(cfg_.theta > 0.0 && cfg_.theta < 1.0))
    throw InvalidParameter("evaluate: theta outside (0,1)");
  if (cfg_.n_levels < 1) throw InvalidParameter("evaluate: n_levels < 1");
  if (cfg_.worker_threads < 1) throw InvalidParameter("evaluate: worker_threads < 1");
  if (cfg_.p_override <= 0 && !(cfg_.tol > 0.0 && cfg_.tol < 1.0))
    throw InvalidParameter("evaluate: tol outside (0,1)");
  if (sources.size() == 0) throw InvalidInput("evaluate: empty source set");

  EvalResult res;
  res.p = cfg_.expansion_order();
  const int p = res.p;
  const int threads = cfg_.worker_threads;

  const auto t_start = clock::now();

  Pyramid pyr = build_pyramid(sources, evals, cfg_.n_levels, threads);
  Connectivity conn = build_connectivity(pyr, cfg_.theta);

  std::vector<cplx> src_z_p(sources.size()), src_m_p(sources.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(sources.size()); ++i) {
    src_z_p[i] = sources.z[pyr.perm[i]];
    src_m_p[i] = sources.m[pyr.perm[i]];
  }
  std::vector<cplx> eval_y_p(evals.size());
  std::vector<std::int64_t> eval_sid_p;
  if (!evals.source_id.empty()) eval_sid_p.resize(evals.size());
  for (std::size_t i = 0; i < evals.size(); ++i) {
    eval_y_p[i] = evals.y[pyr.eval_perm[i]];
    if (!eval_sid_p.empty()) eval_sid_p[i] = evals.source_id[pyr.eval_perm[i]];
  }
  res.timings.t_partition = since(t_start);

  const auto t_p2m0 = clock::now();
  ExpansionPyramid outgoing;
  {
    // P2M timed apart from the serial M2M chain.
    outgoing.levels.resize(pyr.n_levels);
    for (int l = 0; l < pyr.n_levels; ++l) outgoing.levels[l].resize(pyr.levels[l].size());
    const auto& fine = pyr.finest();
    auto& fexp = outgoing.levels[pyr.finest_level()];
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(fine.size()); ++i) {
      const MBox& b = fine[i];
      if (b.n_points() == 0) continue;
      fexp[i] = p2m(b.center,
                    std::span<const cplx>(src_z_p.data() + b.point_begin, b.n_points()),
                    std::span<const cplx>(src_m_p.data() + b.point_begin, b.n_points()),
                    cfg_.kernel, p);
    }
    res.counters.p2m_points += sources.size();
  }
  res.timings.t_p2m = since(t_p2m0);

  const auto t_up0 = clock::now();
  for (int l = pyr.finest_level() - 1; l >= 0; --l) {
    const auto& boxes = pyr.levels[l];
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const MBox& b = boxes[i];
      if (b.n_points() == 0) continue;
      Expansion& acc = outgoing.levels[l][i];
      acc.center = b.center;
      acc.kind = Expansion::Kind::outgoing;
      acc.kernel = cfg_.kernel;
      acc.coeffs.assign(static_cast<std::size_t>(p) + 1, cplx(0, 0));
      for (std::size_t c = 4 * i; c < 4 * i + 4; ++c) {
        const Expansion& child = outgoing.levels[l + 1][c];
        if (child.coeffs.empty()) continue;
        Expansion shifted = m2m(child, b.center);
        for (int k = 0; k <= p; ++k) acc.coeffs[k] += shifted.coeffs[k];
      }
    }
  }
  res.timings.t_upward = since(t_up0);

  // The near field is issued at the start of the downward pass; with a
  // concurrent backend the two phases overlap and join before assembly.
  NearFieldJob job{&pyr,    &conn.finest(), &src_z_p,      &src_m_p,
                   &eval_y_p, &eval_sid_p,  cfg_.kernel,   cfg_.smoother,
                   threads};
  std::vector<cplx> near;
  try {
    backend_->launch(job, near);
  } catch (const std::exception& e) {
    throw BackendError("nearfield launch", e.what());
  }

  const auto t_m2l0 = clock::now();
  ExpansionPyramid locals =
      downward_pass(pyr, conn, outgoing, p, cfg_.task_split_level, threads, &res.counters);
  res.timings.t_m2l = since(t_m2l0);

  const auto t_join0 = clock::now();
  NearFieldStats nf;
  try {
    nf = backend_->finish();
  } catch (const std::exception& e) {
    throw BackendError("nearfield", e.what());
  }
  res.timings.cpu_wait = backend_->concurrent() ? since(t_join0) : 0.0;
  res.timings.t_p2p = nf.seconds;
  res.counters.p2p_pairs += nf.pair_evals;

  const auto t_asm0 = clock::now();
  const auto& fine = pyr.finest();
  const auto& flocal = locals.levels[pyr.finest_level()];
  std::vector<cplx> out_p(evals.size(), cplx(0, 0));
  std::uint64_t l2p_points = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : l2p_points) num_threads(threads)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(fine.size()); ++i) {
    const MBox& b = fine[i];
    if (b.n_evals() == 0) continue;
    const Expansion& local = flocal[i];
    if (local.coeffs.empty()) {
      for (std::uint32_t e = b.eval_begin; e < b.eval_end; ++e) out_p[e] = near[e];
      continue;
    }
    for (std::uint32_t e = b.eval_begin; e < b.eval_end; ++e) {
      out_p[e] = near[e] + eval_local(local, eval_y_p[e]);
      ++l2p_points;
    }
  }
  res.counters.l2p_points += l2p_points;
  res.potentials.resize(evals.size());
  for (std::size_t i = 0; i < evals.size(); ++i) res.potentials[pyr.eval_perm[i]] = out_p[i];
  const double t_assembly = since(t_asm0);

  res.timings.t_q =
      res.timings.t_partition + res.timings.t_p2m + res.timings.t_upward + t_assembly;
  res.timings.t_total = since(t_start);
  if (observer_) observer_(*this, res);
  return res;
}

}  // namespace fmm
