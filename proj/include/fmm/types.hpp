#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmm {

using cplx = std::complex<double>;

// Pairwise interaction kernels on the complex plane.
// harmonic:     G(y, x_j) = -m_j / (y - x_j)
// logarithmic:  G(y, x_j) =  m_j * log(y - x_j)
enum class Kernel { harmonic, logarithmic };

// Near-field regularization applied per P2P term. Far-field expansions
// always use the bare kernel.
//   gaussian: multiply by 1 - exp(-r^2/delta^2)
//   plummer:  multiply by r / sqrt(delta^2 + r^2), turning |G| = m/r
//             into m/sqrt(delta^2 + r^2)
struct Smoother {
  enum class Kind { none, gaussian, plummer };
  Kind kind = Kind::none;
  double delta = 0.0;

  static Smoother none() { return {}; }
  static Smoother gaussian(double delta) { return {Kind::gaussian, delta}; }
  static Smoother plummer(double delta) { return {Kind::plummer, delta}; }
};

struct SourceSet {
  std::vector<cplx> z;  // positions
  std::vector<cplx> m;  // strengths (circulation, mass, ...)

  std::size_t size() const { return z.size(); }
};

struct EvalSet {
  std::vector<cplx> y;  // positions
  // Optional identity of an eval point with a source index; used to skip
  // exact self-pairs when a set is evaluated onto itself. Empty = no overlap.
  std::vector<std::int64_t> source_id;

  std::size_t size() const { return y.size(); }

  static EvalSet self_of(const SourceSet& s) {
    EvalSet e;
    e.y = s.z;
    e.source_id.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) e.source_id[i] = static_cast<std::int64_t>(i);
    return e;
  }
  static EvalSet at(std::vector<cplx> pts) {
    EvalSet e;
    e.y = std::move(pts);
    return e;
  }
};

struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
  std::string phase;
  BackendError(const std::string& phase_, const std::string& what_)
      : std::runtime_error("backend error in " + phase_ + ": " + what_), phase(phase_) {}
};

struct EmissionFailure : std::runtime_error {
  double condition_estimate;
  EmissionFailure(double cond, const std::string& what_)
      : std::runtime_error(what_), condition_estimate(cond) {}
};

struct NoMeasurement : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fmm
