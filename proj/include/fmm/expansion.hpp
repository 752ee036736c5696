#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fmm/types.hpp"

namespace fmm {

// Truncated series anchored at a box center.
//
// outgoing (multipole), harmonic kernel:
//   Phi(z) ~= sum_{k=0..p} coeffs[k] * (z - center)^-(k+1)
// outgoing, logarithmic kernel:
//   Phi(z) ~= coeffs[0]*log(z - center) + sum_{k=1..p} coeffs[k]*(z - center)^-k
// ingoing (local), both kernels:
//   Phi(z) ~= sum_{k=0..p} coeffs[k] * (z - center)^k
struct Expansion {
  enum class Kind { outgoing, ingoing };
  cplx center{0.0, 0.0};
  Kind kind = Kind::outgoing;
  Kernel kernel = Kernel::harmonic;
  std::vector<cplx> coeffs;  // length p+1

  int order() const { return static_cast<int>(coeffs.size()) - 1; }
};

enum class PRule { formula, table };

// p = max(1, floor(calibration * ln(tol)/ln(theta))). calibration 1.0 is the
// conservative default.
int choose_p_formula(double tol, double theta, double calibration = 1.0);

// Nearest-cell lookup in the published (tol, theta) -> p table for the
// harmonic kernel; tol rows 1e-6/1e-7/1e-8, theta columns 0.35..0.65.
int choose_p_table(double tol, double theta);

int choose_p(PRule rule, double tol, double theta, double calibration = 1.0);

double smoother_factor(const Smoother& s, double r);

// Single kernel term G(y, x) for strength m; callers must not evaluate at
// y == x.
cplx kernel_term(Kernel k, cplx y, cplx x, cplx m);

// Direct summation: for each target, sum of G over all sources, skipping a
// source whose index equals the target's source_id. One-directional by
// design. Near-field smoothing multiplies each term by the smoother factor.
std::vector<cplx> p2p_direct(const EvalSet& targets, const SourceSet& sources, Kernel kernel,
                             const Smoother& smoother = Smoother::none());

// Operator kernels. Translations are exact at fixed p (triangular shifts);
// only M2L truncates.
Expansion p2m(cplx box_center, std::span<const cplx> z, std::span<const cplx> m, Kernel kernel,
              int p);
Expansion m2m(const Expansion& child, cplx new_center);
Expansion m2l(const Expansion& outgoing, cplx target_center, int p);
void m2l_add(const Expansion& outgoing, Expansion& local);
Expansion l2l(const Expansion& parent_local, cplx child_center);
void l2l_add(const Expansion& parent_local, Expansion& child_local);

// Horner evaluation of a local expansion at each eval point.
std::vector<cplx> l2p(const Expansion& local, std::span<const cplx> evals);
cplx eval_local(const Expansion& local, cplx y);

// Evaluates an outgoing expansion directly (test/diagnostic use).
cplx eval_outgoing(const Expansion& outgoing, cplx y);

// Binomial coefficients as doubles; valid for n <= 200.
double binomial(int n, int k);

inline constexpr int kMaxOrder = 96;

}  // namespace fmm
