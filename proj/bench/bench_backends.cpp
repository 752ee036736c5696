// Compares the serial reference paths against the OpenMP-parallel ones on
// the same inputs: near-field backends (serial vs pool), the task-parallel
// downward pass, and the full pipeline, plus the predicted operation counts.

#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fmm/engine.hpp"

using namespace fmm;

namespace {

SourceSet uniform_sources(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  SourceSet s;
  s.z.resize(n);
  s.m.resize(n);
  for (long i = 0; i < n; ++i) {
    s.z[i] = cplx(uni(rng), uni(rng));
    s.m[i] = cplx(uni(rng), 0.0);
  }
  return s;
}

double run(FmmEngine& eng, const SourceSet& s, const EvalSet& e, int reps, double* max_dev,
           const std::vector<cplx>* ref) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    EvalResult res = eng.evaluate(s, e);
    best = std::min(best, res.timings.t_total);
    if (ref && max_dev) {
      for (std::size_t i = 0; i < ref->size(); ++i)
        *max_dev = std::max(*max_dev, std::abs(res.potentials[i] - (*ref)[i]));
    }
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int max_threads = 2;
#ifdef _OPENMP
  max_threads = omp_get_max_threads();
#endif
  if (argc > 1) max_threads = std::atoi(argv[1]);

  std::printf("backend comparison, best of 3, threads up to %d\n", max_threads);
  std::printf("%8s %8s %6s %10s %10s %10s %10s %8s %9s\n", "N", "backend", "thr", "t_total",
              "t_p2p", "t_m2l", "t_q", "speedup", "max_dev");

  for (long n : {20000L, 50000L, 100000L}) {
    SourceSet src = uniform_sources(n, 7);
    EvalSet evals = EvalSet::self_of(src);
    FmmConfig cfg;
    cfg.theta = 0.5;
    cfg.tol = 1e-6;
    cfg.p_rule = PRule::table;
    cfg.n_levels = 1 + static_cast<int>(std::lround(std::log2(double(n)) / 2.0)) - 2;

    cfg.backend = BackendKind::serial;
    cfg.worker_threads = 1;
    FmmEngine serial(cfg);
    EvalResult ref = serial.evaluate(src, evals);
    double tser = run(serial, src, evals, 2, nullptr, nullptr);
    std::printf("%8ld %8s %6d %10.4f %10.4f %10.4f %10.4f %8.2f %9s\n", n, "serial", 1, tser,
                ref.timings.t_p2p, ref.timings.t_m2l, ref.timings.t_q, 1.0, "-");

    for (int thr = 2; thr <= max_threads; thr *= 2) {
      FmmConfig pc = cfg;
      pc.backend = BackendKind::pool;
      pc.worker_threads = thr;
      FmmEngine pool(pc);
      double dev = 0.0;
      double t = run(pool, src, evals, 3, &dev, &ref.potentials);
      EvalResult sample = pool.evaluate(src, evals);
      std::printf("%8ld %8s %6d %10.4f %10.4f %10.4f %10.4f %8.2f %9.2e\n", n, "pool", thr, t,
                  sample.timings.t_p2p, sample.timings.t_m2l, sample.timings.t_q, tser / t,
                  dev);
    }

    FmmConfig tc = cfg;
    tc.backend = BackendKind::throttled;
    tc.worker_threads = max_threads;
    FmmEngine thr(tc);
    double dev = 0.0;
    double t = run(thr, src, evals, 3, &dev, &ref.potentials);
    EvalResult sample = thr.evaluate(src, evals);
    std::printf("%8ld %8s %6d %10.4f %10.4f %10.4f %10.4f %8.2f %9.2e (wait %.4f)\n", n,
                "throttl", max_threads, t, sample.timings.t_p2p, sample.timings.t_m2l,
                sample.timings.t_q, tser / t, dev, sample.timings.cpu_wait);

    CostEstimate est = estimate_cost(double(n), cfg.n_levels, cfg.theta, ref.p);
    std::printf("%8s predicted c_p2p=%.3e c_m2l=%.3e  measured pairs=%llu m2l=%llu\n", "",
                est.c_p2p, est.c_m2l,
                static_cast<unsigned long long>(ref.counters.p2p_pairs),
                static_cast<unsigned long long>(ref.counters.m2l_ops));
  }
  return 0;
}
