#include "fmm/expansion.hpp"

#include <array>
#include <cmath>

namespace fmm {

namespace {

constexpr int kBinomialRows = 2 * kMaxOrder + 4;

const double* binomial_row(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(static_cast<std::size_t>(kBinomialRows) * kBinomialRows, 0.0);
    for (int i = 0; i < kBinomialRows; ++i) {
      t[static_cast<std::size_t>(i) * kBinomialRows] = 1.0;
      for (int j = 1; j <= i; ++j)
        t[static_cast<std::size_t>(i) * kBinomialRows + j] =
            t[static_cast<std::size_t>(i - 1) * kBinomialRows + j - 1] +
            t[static_cast<std::size_t>(i - 1) * kBinomialRows + j];
    }
    return t;
  }();
  return table.data() + static_cast<std::size_t>(n) * kBinomialRows;
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return binomial_row(n)[k];
}

int choose_p_formula(double tol, double theta, double calibration) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidParameter("choose_p: tol outside (0,1)");
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("choose_p: theta outside (0,1)");
  if (!(calibration > 0.0)) throw InvalidParameter("choose_p: calibration must be positive");
  const int p = static_cast<int>(std::floor(calibration * std::log(tol) / std::log(theta)));
  return std::min(std::max(p, 1), kMaxOrder);
}

int choose_p_table(double tol, double theta) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidParameter("choose_p: tol outside (0,1)");
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("choose_p: theta outside (0,1)");
  static constexpr std::array<double, 3> tols = {1e-6, 1e-7, 1e-8};
  static constexpr std::array<double, 5> thetas = {0.35, 0.4, 0.5, 0.6, 0.65};
  static constexpr int table[3][5] = {
      {11, 13, 17, 24, 28},
      {14, 16, 21, 28, 34},
      {16, 18, 24, 33, 39},
  };
  int row = 0;
  double best = 1e300;
  for (int i = 0; i < 3; ++i) {
    const double d = std::abs(std::log10(tol) - std::log10(tols[i]));
    if (d < best - 1e-12 || (std::abs(d - best) <= 1e-12 && tols[i] < tols[row])) {
      best = d;
      row = i;
    }
  }
  int col = 0;
  best = 1e300;
  for (int j = 0; j < 5; ++j) {
    const double d = std::abs(theta - thetas[j]);
    if (d < best - 1e-12 || (std::abs(d - best) <= 1e-12 && thetas[j] > thetas[col])) {
      best = d;
      col = j;
    }
  }
  return table[row][col];
}

int choose_p(PRule rule, double tol, double theta, double calibration) {
  return rule == PRule::table ? choose_p_table(tol, theta)
                              : choose_p_formula(tol, theta, calibration);
}

double smoother_factor(const Smoother& s, double r) {
  switch (s.kind) {
    case Smoother::Kind::none:
      return 1.0;
    case Smoother::Kind::gaussian:
      return 1.0 - std::exp(-(r * r) / (s.delta * s.delta));
    case Smoother::Kind::plummer:
      return r / std::sqrt(s.delta * s.delta + r * r);
  }
  return 1.0;
}

cplx kernel_term(Kernel k, cplx y, cplx x, cplx m) {
  return k == Kernel::harmonic ? -m / (y - x) : m * std::log(y - x);
}

std::vector<cplx> p2p_direct(const EvalSet& targets, const SourceSet& sources, Kernel kernel,
                             const Smoother& smoother) {
  for (const cplx& z : sources.z)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw InvalidInput("p2p_direct: non-finite source");
  for (const cplx& m : sources.m)
    if (!std::isfinite(m.real()) || !std::isfinite(m.imag()))
      throw InvalidInput("p2p_direct: non-finite strength");
  for (const cplx& y : targets.y)
    if (!std::isfinite(y.real()) || !std::isfinite(y.imag()))
      throw InvalidInput("p2p_direct: non-finite target");

  std::vector<cplx> out(targets.size(), cplx(0, 0));
  const bool ids = !targets.source_id.empty();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const cplx y = targets.y[i];
    const std::int64_t self = ids ? targets.source_id[i] : -1;
    cplx acc(0, 0);
    for (std::size_t j = 0; j < sources.size(); ++j) {
      if (static_cast<std::int64_t>(j) == self) continue;
      const double r = std::abs(y - sources.z[j]);
      const double g = smoother_factor(smoother, r);
      if (g == 0.0) continue;
      acc += kernel_term(kernel, y, sources.z[j], sources.m[j]) * g;
    }
    out[i] = acc;
  }
  return out;
}

Expansion p2m(cplx box_center, std::span<const cplx> z, std::span<const cplx> m, Kernel kernel,
              int p) {
  Expansion e;
  e.center = box_center;
  e.kind = Expansion::Kind::outgoing;
  e.kernel = kernel;
  e.coeffs.assign(static_cast<std::size_t>(p) + 1, cplx(0, 0));
  if (kernel == Kernel::harmonic) {
    for (std::size_t j = 0; j < z.size(); ++j) {
      const cplx t = z[j] - box_center;
      cplx tp(1, 0);
      for (int k = 0; k <= p; ++k) {
        e.coeffs[k] -= m[j] * tp;
        tp *= t;
      }
    }
  } else {
    for (std::size_t j = 0; j < z.size(); ++j) {
      const cplx t = z[j] - box_center;
      e.coeffs[0] += m[j];
      cplx tp = t;
      for (int k = 1; k <= p; ++k) {
        e.coeffs[k] -= m[j] * tp / static_cast<double>(k);
        tp *= t;
      }
    }
  }
  return e;
}

Expansion m2m(const Expansion& child, cplx new_center) {
  const int p = child.order();
  const Kernel kernel = child.kernel;
  Expansion out;
  out.center = new_center;
  out.kind = Expansion::Kind::outgoing;
  out.kernel = kernel;
  out.coeffs.assign(static_cast<std::size_t>(p) + 1, cplx(0, 0));
  const cplx s = child.center - new_center;

  std::vector<cplx> spow(static_cast<std::size_t>(p) + 1);
  spow[0] = cplx(1, 0);
  for (int k = 1; k <= p; ++k) spow[k] = spow[k - 1] * s;

  if (kernel == Kernel::harmonic) {
    for (int l = 0; l <= p; ++l) {
      const double* bl = binomial_row(l);
      cplx acc(0, 0);
      for (int k = 0; k <= l; ++k) acc += bl[k] * spow[l - k] * child.coeffs[k];
      out.coeffs[l] = acc;
    }
  } else {
    out.coeffs[0] = child.coeffs[0];
    for (int l = 1; l <= p; ++l) {
      const double* bl = binomial_row(l);
      cplx acc = -child.coeffs[0] * spow[l] / static_cast<double>(l);
      for (int k = 1; k <= l; ++k)
        acc += (static_cast<double>(k) / l) * bl[k] * spow[l - k] * child.coeffs[k];
      out.coeffs[l] = acc;
    }
  }
  return out;
}

void m2l_add(const Expansion& outgoing, Expansion& local) {
  const Kernel kernel = outgoing.kernel;
  const cplx z0 = outgoing.center - local.center;
  if (z0 == cplx(0, 0))
    throw SingularConfiguration("m2l: target center coincides with source center");
  const int p = outgoing.order();
  const cplx w = 1.0 / z0;

  // (p+1) * log10|w| beyond double range -> run the power chain in long
  // double (deep trees over clustered points).
  const double lw = std::log10(std::max(std::abs(w), 1.0));
  if ((p + 2) * lw < 250.0) {
    std::vector<cplx> v(static_cast<std::size_t>(p) + 1);
    cplx wp = w;  // w^(k+1)
    double sign = -1.0;  // (-1)^(k+1)
    for (int k = 0; k <= p; ++k) {
      v[k] = outgoing.coeffs[k] * sign * wp;
      wp *= w;
      sign = -sign;
    }
    if (kernel == Kernel::harmonic) {
      // c_l = w^l * sum_k b_k (-1)^(k+1) C(l+k,k) w^(k+1)
      cplx wl(1, 0);
      for (int l = 0; l <= p; ++l) {
        cplx acc(0, 0);
        for (int k = 0; k <= p; ++k) acc += binomial_row(l + k)[k] * v[k];
        local.coeffs[l] += wl * acc;
        wl *= w;
      }
    } else {
      // log kernel: a_0 contributes log(-z0) to c_0 and -a_0 w^l / l above.
      const cplx a0 = outgoing.coeffs[0];
      cplx c0 = a0 * std::log(-z0);
      for (int k = 1; k <= p; ++k) c0 += -v[k] * z0;  // a_k (-1)^k w^k
      local.coeffs[0] += c0;
      cplx wl = w;
      for (int l = 1; l <= p; ++l) {
        cplx acc = -a0 / static_cast<double>(l);
        for (int k = 1; k <= p; ++k) acc += binomial_row(l + k - 1)[k - 1] * (-v[k] * z0);
        local.coeffs[l] += wl * acc;
        wl *= w;
      }
    }
    return;
  }

  using lcplx = std::complex<long double>;
  const lcplx wl_(w.real(), w.imag());
  std::vector<lcplx> v(static_cast<std::size_t>(p) + 1);
  lcplx wp = wl_;
  long double sign = -1.0L;
  for (int k = 0; k <= p; ++k) {
    v[k] = lcplx(outgoing.coeffs[k].real(), outgoing.coeffs[k].imag()) * sign * wp;
    wp *= wl_;
    sign = -sign;
  }
  if (kernel == Kernel::harmonic) {
    lcplx wpl(1.0L, 0.0L);
    for (int l = 0; l <= p; ++l) {
      lcplx acc(0, 0);
      for (int k = 0; k <= p; ++k) acc += (long double)binomial_row(l + k)[k] * v[k];
      acc *= wpl;
      local.coeffs[l] += cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
      wpl *= wl_;
    }
  } else {
    const lcplx z0l(z0.real(), z0.imag());
    const lcplx a0(outgoing.coeffs[0].real(), outgoing.coeffs[0].imag());
    const cplx lg = std::log(-z0);
    lcplx c0 = a0 * lcplx(lg.real(), lg.imag());
    for (int k = 1; k <= p; ++k) c0 += -v[k] * z0l;
    local.coeffs[0] += cplx(static_cast<double>(c0.real()), static_cast<double>(c0.imag()));
    lcplx wpl = wl_;
    for (int l = 1; l <= p; ++l) {
      lcplx acc = -a0 / (long double)l;
      for (int k = 1; k <= p; ++k) acc += (long double)binomial_row(l + k - 1)[k - 1] * (-v[k] * z0l);
      acc *= wpl;
      local.coeffs[l] += cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
      wpl *= wl_;
    }
  }
}

Expansion m2l(const Expansion& outgoing, cplx target_center, int p) {
  Expansion local;
  local.center = target_center;
  local.kind = Expansion::Kind::ingoing;
  local.kernel = outgoing.kernel;
  local.coeffs.assign(static_cast<std::size_t>(p) + 1, cplx(0, 0));
  if (outgoing.order() != p)
    throw InvalidParameter("m2l: outgoing order must match requested p");
  m2l_add(outgoing, local);
  return local;
}

void l2l_add(const Expansion& parent_local, Expansion& child_local) {
  const int p = parent_local.order();
  const cplx s = child_local.center - parent_local.center;
  std::vector<cplx> spow(static_cast<std::size_t>(p) + 1);
  spow[0] = cplx(1, 0);
  for (int k = 1; k <= p; ++k) spow[k] = spow[k - 1] * s;
  for (int l = 0; l <= p; ++l) {
    cplx acc(0, 0);
    for (int k = l; k <= p; ++k) acc += binomial_row(k)[l] * spow[k - l] * parent_local.coeffs[k];
    child_local.coeffs[l] += acc;
  }
}

Expansion l2l(const Expansion& parent_local, cplx child_center) {
  Expansion out;
  out.center = child_center;
  out.kind = Expansion::Kind::ingoing;
  out.kernel = parent_local.kernel;
  out.coeffs.assign(parent_local.coeffs.size(), cplx(0, 0));
  l2l_add(parent_local, out);
  return out;
}

cplx eval_local(const Expansion& local, cplx y) {
  const cplx w = y - local.center;
  cplx acc(0, 0);
  for (int k = local.order(); k >= 0; --k) acc = acc * w + local.coeffs[k];
  return acc;
}

std::vector<cplx> l2p(const Expansion& local, std::span<const cplx> evals) {
  std::vector<cplx> out(evals.size());
  for (std::size_t i = 0; i < evals.size(); ++i) out[i] = eval_local(local, evals[i]);
  return out;
}

cplx eval_outgoing(const Expansion& outgoing, cplx y) {
  const Kernel kernel = outgoing.kernel;
  const cplx w = y - outgoing.center;
  const cplx iw = 1.0 / w;
  if (kernel == Kernel::harmonic) {
    cplx acc(0, 0);
    cplx pw = iw;
    for (int k = 0; k <= outgoing.order(); ++k) {
      acc += outgoing.coeffs[k] * pw;
      pw *= iw;
    }
    return acc;
  }
  cplx acc = outgoing.coeffs[0] * std::log(w);
  cplx pw = iw;
  for (int k = 1; k <= outgoing.order(); ++k) {
    acc += outgoing.coeffs[k] * pw;
    pw *= iw;
  }
  return acc;
}

}  // namespace fmm
