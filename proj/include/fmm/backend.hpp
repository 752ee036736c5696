#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fmm/geometry.hpp"
#include "fmm/types.hpp"

namespace fmm {

enum class BackendKind { serial, pool, throttled };

BackendKind backend_from_string(const std::string& s);
const char* to_string(BackendKind k);

// Accelerator stand-in knobs: a fixed launch latency plus a throughput
// factor <= 1 that stretches the compute wall time by 1/throughput.
struct ThrottleSettings {
  double latency_s = 0.002;
  double throughput = 1.0;
};

// Near-field work unit over level-permuted arrays. All pointers must stay
// valid until finish() returns.
struct NearFieldJob {
  const Pyramid* pyramid = nullptr;
  const LevelConn* finest = nullptr;
  const std::vector<cplx>* src_z = nullptr;
  const std::vector<cplx>* src_m = nullptr;
  const std::vector<cplx>* eval_y = nullptr;
  const std::vector<std::int64_t>* eval_sid = nullptr;  // -1 entries: no identity
  Kernel kernel = Kernel::harmonic;
  Smoother smoother;
  int threads = 1;
};

struct NearFieldStats {
  double seconds = 0.0;          // backend busy time
  std::uint64_t pair_evals = 0;  // kernel evaluations performed
};

// Computes, for every eval point of every finest box, the direct
// contribution of all sources in the box's strong list (self pairs
// skipped). Results agree across implementations to floating-point
// reassociation; the per-point accumulation order is fixed.
class NearFieldBackend {
 public:
  virtual ~NearFieldBackend() = default;
  virtual bool concurrent() const = 0;
  virtual const char* name() const = 0;
  // Starts the job writing into out (resized to the eval count). Synchronous
  // backends compute before returning; concurrent ones return immediately.
  virtual void launch(const NearFieldJob& job, std::vector<cplx>& out) = 0;
  virtual NearFieldStats finish() = 0;
};

std::unique_ptr<NearFieldBackend> make_backend(BackendKind kind, ThrottleSettings ts = {});

// Shared kernel loop, also the serial reference the parallel paths are
// tested against.
NearFieldStats nearfield_run(const NearFieldJob& job, std::vector<cplx>& out, bool parallel);

}  // namespace fmm
