#include "fmm/backend.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "fmm/expansion.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fmm {

BackendKind backend_from_string(const std::string& s) {
  if (s == "serial") return BackendKind::serial;
  if (s == "pool") return BackendKind::pool;
  if (s == "throttled") return BackendKind::throttled;
  throw InvalidParameter("unknown backend: " + s);
}

const char* to_string(BackendKind k) {
  switch (k) {
    case BackendKind::serial: return "serial";
    case BackendKind::pool: return "pool";
    case BackendKind::throttled: return "throttled";
  }
  return "?";
}

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) {
  return std::chrono::duration<double>(clock::now() - t0).count();
}

// One finest box: every eval point accumulates over the sources of all
// strongly connected boxes, in ascending box order.
std::uint64_t near_box(const NearFieldJob& job, std::uint32_t bi, std::vector<cplx>& out) {
  const auto& boxes = job.pyramid->finest();
  const MBox& tb = boxes[bi];
  if (tb.n_evals() == 0) return 0;
  const auto& strong = job.finest->strong[bi];
  const auto& sz = *job.src_z;
  const auto& sm = *job.src_m;
  const auto& ey = *job.eval_y;
  const bool ids = job.eval_sid && !job.eval_sid->empty();
  std::uint64_t pairs = 0;
  for (std::uint32_t e = tb.eval_begin; e < tb.eval_end; ++e) {
    const cplx y = ey[e];
    const std::int64_t self = ids ? (*job.eval_sid)[e] : -1;
    cplx acc(0, 0);
    for (std::uint32_t sb : strong) {
      const MBox& src = boxes[sb];
      for (std::uint32_t j = src.point_begin; j < src.point_end; ++j) {
        if (static_cast<std::int64_t>(job.pyramid->perm[j]) == self) continue;
        const double r = std::abs(y - sz[j]);
        const double g = smoother_factor(job.smoother, r);
        ++pairs;
        if (g == 0.0) continue;
        acc += kernel_term(job.kernel, y, sz[j], sm[j]) * g;
      }
    }
    out[e] = acc;
  }
  return pairs;
}

}  // namespace

NearFieldStats nearfield_run(const NearFieldJob& job, std::vector<cplx>& out, bool parallel) {
  const auto t0 = clock::now();
  out.assign(job.eval_y->size(), cplx(0, 0));
  const std::int64_t nb = static_cast<std::int64_t>(job.pyramid->finest().size());
  std::uint64_t pairs = 0;
  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : pairs) num_threads(job.threads)
#endif
    for (std::int64_t i = 0; i < nb; ++i)
      pairs += near_box(job, static_cast<std::uint32_t>(i), out);
  } else {
    for (std::int64_t i = 0; i < nb; ++i)
      pairs += near_box(job, static_cast<std::uint32_t>(i), out);
  }
  return {seconds_since(t0), pairs};
}

namespace {

class SerialBackend final : public NearFieldBackend {
 public:
  bool concurrent() const override { return false; }
  const char* name() const override { return "serial"; }
  void launch(const NearFieldJob& job, std::vector<cplx>& out) override {
    stats_ = nearfield_run(job, out, /*parallel=*/false);
  }
  NearFieldStats finish() override { return stats_; }

 private:
  NearFieldStats stats_;
};

class PoolBackend final : public NearFieldBackend {
 public:
  bool concurrent() const override { return false; }
  const char* name() const override { return "pool"; }
  void launch(const NearFieldJob& job, std::vector<cplx>& out) override {
    stats_ = nearfield_run(job, out, /*parallel=*/true);
  }
  NearFieldStats finish() override { return stats_; }

 private:
  NearFieldStats stats_;
};

// Runs on its own thread so the caller overlaps it with the downward pass.
// Models the accelerator's fixed launch latency plus limited throughput;
// results are computed exactly, only the wall time is shaped.
class ThrottledBackend final : public NearFieldBackend {
 public:
  explicit ThrottledBackend(ThrottleSettings ts) : ts_(ts) {
    if (!(ts_.throughput > 0.0) || ts_.throughput > 1.0)
      throw InvalidParameter("throttled backend: throughput must be in (0,1]");
    if (ts_.latency_s < 0.0)
      throw InvalidParameter("throttled backend: latency must be >= 0");
  }
  bool concurrent() const override { return true; }
  const char* name() const override { return "throttled"; }

  void launch(const NearFieldJob& job, std::vector<cplx>& out) override {
    error_ = nullptr;
    worker_ = std::thread([this, &job, &out] {
      try {
        const auto t0 = clock::now();
        std::this_thread::sleep_for(std::chrono::duration<double>(ts_.latency_s));
        const auto c0 = clock::now();
        NearFieldStats s = nearfield_run(job, out, /*parallel=*/false);
        const double stretch = std::chrono::duration<double>(clock::now() - c0).count() *
                               (1.0 / ts_.throughput - 1.0);
        if (stretch > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(stretch));
        stats_ = {seconds_since(t0), s.pair_evals};
      } catch (...) {
        error_ = std::current_exception();
      }
    });
  }

  NearFieldStats finish() override {
    if (worker_.joinable()) worker_.join();
    if (error_) std::rethrow_exception(error_);
    return stats_;
  }

  ~ThrottledBackend() override {
    if (worker_.joinable()) worker_.join();
  }

 private:
  ThrottleSettings ts_;
  std::thread worker_;
  NearFieldStats stats_;
  std::exception_ptr error_;
};

}  // namespace

std::unique_ptr<NearFieldBackend> make_backend(BackendKind kind, ThrottleSettings ts) {
  switch (kind) {
    case BackendKind::serial: return std::make_unique<SerialBackend>();
    case BackendKind::pool: return std::make_unique<PoolBackend>();
    case BackendKind::throttled: return std::make_unique<ThrottledBackend>(ts);
  }
  throw InvalidParameter("unknown backend kind");
}

}  // namespace fmm
