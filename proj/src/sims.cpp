#include "fmm/sims.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace fmm::sims {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
const cplx kInv2PiI = cplx(0.0, -1.0) / kTwoPi;  // 1/(2*pi*i)

void configure(FmmEngine& engine, double delta) {
  FmmConfig cfg = engine.config();
  if (cfg.kernel != Kernel::harmonic || cfg.smoother.kind != Smoother::Kind::gaussian ||
      cfg.smoother.delta != delta) {
    cfg.kernel = Kernel::harmonic;
    cfg.smoother = Smoother::gaussian(delta);
    engine.set_config(cfg);
  }
}
}  // namespace

double smoother(double r, double delta) {
  if (!(delta > 0.0)) throw InvalidParameter("smoother: delta must be > 0");
  if (r < 0.0) throw InvalidParameter("smoother: r must be >= 0");
  return 1.0 - std::exp(-(r * r) / (delta * delta));
}

double VortexSystem::total_circulation() const {
  return std::accumulate(gamma.begin(), gamma.end(), 0.0);
}

VortexSystem init_shear_layer(int n, double aspect, double gamma) {
  if (n < 2 || n % 2 != 0) throw InvalidParameter("init_shear_layer: n must be even and >= 2");
  if (!(aspect > 0.0)) throw InvalidParameter("init_shear_layer: aspect must be > 0");
  int ny = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n) / aspect)));
  ny = std::max(2, ny - ny % 2);
  while (n % ny != 0) ny -= 2;  // ny == 2 always divides an even n
  const int nx = n / ny;

  const double w = aspect, h = 1.0;
  VortexSystem sys;
  sys.pos.reserve(n);
  sys.gamma.reserve(n);
  // Mirror rows are emitted adjacently so the running circulation sum
  // cancels pairwise and stays exactly zero.
  for (int j = 0; j < ny / 2; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double x = -0.5 * w + (i + 0.5) * w / nx;
      const double ylo = -0.5 * h + (j + 0.5) * h / ny;
      const double yhi = -0.5 * h + (j + ny / 2 + 0.5) * h / ny;
      sys.pos.emplace_back(x, ylo);
      sys.gamma.push_back(-gamma);
      sys.pos.emplace_back(x, yhi);
      sys.gamma.push_back(gamma);
    }
  }
  sys.delta = 2.0 * w / nx;
  sys.dt = 0.5 * h / ny;
  return sys;
}

std::vector<cplx> vortex_velocities(const VortexSystem& sys, FmmEngine& engine,
                                    EvalResult* info) {
  if (sys.size() == 0) return {};
  if (sys.size() == 1) {
    if (info) *info = EvalResult{};
    return {cplx(0, 0)};
  }
  configure(engine, sys.delta);
  SourceSet src;
  src.z = sys.pos;
  src.m.resize(sys.size());
  for (std::size_t k = 0; k < sys.size(); ++k) src.m[k] = sys.gamma[k] * kInv2PiI;
  EvalResult res = engine.evaluate(src, EvalSet::self_of(src));
  std::vector<cplx> vel(sys.size());
  for (std::size_t k = 0; k < sys.size(); ++k) vel[k] = std::conj(res.potentials[k]);
  if (info) *info = std::move(res);
  return vel;
}

void euler_step(VortexSystem& sys, const std::vector<cplx>& velocities) {
  if (velocities.size() != sys.size())
    throw InvalidInput("euler_step: velocity count mismatch");
  for (std::size_t k = 0; k < sys.size(); ++k) sys.pos[k] += sys.dt * velocities[k];
}

GravitySystem init_rotating_disc(int n, double radius, double omega, std::uint64_t seed,
                                 double total_mass) {
  if (n < 1) throw InvalidParameter("init_rotating_disc: n must be >= 1");
  if (!(radius > 0.0)) throw InvalidParameter("init_rotating_disc: radius must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  GravitySystem sys;
  sys.pos.resize(n);
  sys.vel.resize(n);
  sys.mass.assign(n, total_mass / n);
  sys.delta = 0.01 * radius;
  for (int i = 0; i < n; ++i) {
    const double r = radius * std::sqrt(uni(rng));
    const double a = kTwoPi * uni(rng);
    sys.pos[i] = std::polar(r, a);
    sys.vel[i] = cplx(0.0, omega) * sys.pos[i];  // rigid-body v = i*omega*z
  }
  return sys;
}

std::vector<cplx> gravity_forces(const GravitySystem& sys, FmmEngine& engine, EvalResult* info) {
  if (sys.size() == 0) return {};
  if (sys.size() == 1) {
    if (info) *info = EvalResult{};
    return {cplx(0, 0)};
  }
  FmmConfig cfg = engine.config();
  if (cfg.kernel != Kernel::harmonic || cfg.smoother.kind != Smoother::Kind::plummer ||
      cfg.smoother.delta != sys.delta) {
    cfg.kernel = Kernel::harmonic;
    cfg.smoother = Smoother::plummer(sys.delta);
    engine.set_config(cfg);
  }
  SourceSet src;
  src.z = sys.pos;
  src.m.resize(sys.size());
  for (std::size_t j = 0; j < sys.size(); ++j) src.m[j] = cplx(sys.mass[j], 0.0);
  EvalResult res = engine.evaluate(src, EvalSet::self_of(src));
  std::vector<cplx> acc(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) acc[i] = sys.G * std::conj(res.potentials[i]);
  if (info) *info = std::move(res);
  return acc;
}

std::vector<cplx> stormer_verlet_step(GravitySystem& sys, const std::vector<cplx>& accel,
                                      FmmEngine& engine, EvalResult* info) {
  if (accel.size() != sys.size())
    throw InvalidInput("stormer_verlet_step: acceleration count mismatch");
  const double half = 0.5 * sys.dt;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    sys.vel[i] += half * accel[i];
    sys.pos[i] += sys.dt * sys.vel[i];
  }
  std::vector<cplx> acc_next = gravity_forces(sys, engine, info);
  for (std::size_t i = 0; i < sys.size(); ++i) sys.vel[i] += half * acc_next[i];
  return acc_next;
}

// --- cylinder flow -----------------------------------------------------------

double CylinderFlow::emission_offset() const {
  return std::sqrt(0.5 * nu * vortices.dt);
}

namespace {

cplx freestream_conj(const CylinderFlow& flow, cplx z) {
  return flow.V_inf * (1.0 - (flow.R * flow.R) / (z * z));
}

cplx mirror_of(const CylinderFlow& flow, cplx z) {
  return (flow.R * flow.R) / std::conj(z);
}

void check_outside(const CylinderFlow& flow, const std::vector<cplx>& pos) {
  const double rmin = flow.R * (1.0 - 1e-12);
  for (const cplx& z : pos)
    if (std::abs(z) < rmin)
      throw InvalidState("cylinder flow: vortex inside the cylinder");
}

}  // namespace

std::vector<cplx> cylinder_field_at(const CylinderFlow& flow, FmmEngine& engine,
                                    const std::vector<cplx>& vortex_pos,
                                    const std::vector<cplx>& at, bool self_eval,
                                    EvalResult* info) {
  check_outside(flow, vortex_pos);
  const std::size_t n = vortex_pos.size();
  std::vector<cplx> out(at.size());
  if (n == 0) {
    for (std::size_t i = 0; i < at.size(); ++i) out[i] = std::conj(freestream_conj(flow, at[i]));
    if (info) *info = EvalResult{};
    return out;
  }
  configure(engine, flow.vortices.delta);
  SourceSet src;
  src.z.resize(2 * n);
  src.m.resize(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx mk = flow.vortices.gamma[k] * kInv2PiI;
    src.z[k] = vortex_pos[k];
    src.m[k] = mk;
    src.z[n + k] = mirror_of(flow, vortex_pos[k]);
    src.m[n + k] = -mk;
  }
  EvalSet evals = EvalSet::at(at);
  if (self_eval) {
    evals.source_id.resize(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) evals.source_id[i] = static_cast<std::int64_t>(i);
  }
  EvalResult res = engine.evaluate(src, evals);
  for (std::size_t i = 0; i < at.size(); ++i)
    out[i] = std::conj(freestream_conj(flow, at[i]) + res.potentials[i]);
  if (info) *info = std::move(res);
  return out;
}

std::vector<cplx> cylinder_velocities(const CylinderFlow& flow, FmmEngine& engine,
                                      EvalResult* info) {
  return cylinder_field_at(flow, engine, flow.vortices.pos, flow.vortices.pos,
                           /*self_eval=*/true, info);
}

std::vector<cplx> wall_collocation_points(const CylinderFlow& flow) {
  std::vector<cplx> pts(flow.n_colloc);
  for (int i = 0; i < flow.n_colloc; ++i)
    pts[i] = std::polar(flow.R, kTwoPi * i / flow.n_colloc);
  return pts;
}

std::vector<double> wall_radial_velocity(const CylinderFlow& flow, FmmEngine& engine) {
  const auto pts = wall_collocation_points(flow);
  const auto v = cylinder_field_at(flow, engine, flow.vortices.pos, pts, false);
  std::vector<double> rad(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const cplx unit = pts[i] / std::abs(pts[i]);
    rad[i] = (v[i] * std::conj(unit)).real();
  }
  return rad;
}

std::vector<double> wall_tangential_slip(const CylinderFlow& flow, FmmEngine& engine) {
  const auto pts = wall_collocation_points(flow);
  const auto v = cylinder_field_at(flow, engine, flow.vortices.pos, pts, false);
  std::vector<double> tan(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const cplx unit = pts[i] / std::abs(pts[i]);
    tan[i] = (v[i] * std::conj(unit)).imag();  // counterclockwise positive
  }
  return tan;
}

namespace {

// Velocity at y from a unit vortex at x plus its mirror, smoothed; direct
// evaluation used for the emission influence matrix and slip right-hand side.
cplx pair_velocity(const CylinderFlow& flow, cplx y, cplx x, double gamma) {
  const Smoother sm = Smoother::gaussian(flow.vortices.delta);
  const cplx m = gamma * kInv2PiI;
  const cplx xm = mirror_of(flow, x);
  cplx acc(0, 0);
  const double rd = std::abs(y - x);
  if (double g = smoother_factor(sm, rd); g != 0.0 && rd > 0.0)
    acc += kernel_term(Kernel::harmonic, y, x, m) * g;
  const double rm = std::abs(y - xm);
  if (double g = smoother_factor(sm, rm); g != 0.0 && rm > 0.0)
    acc += kernel_term(Kernel::harmonic, y, xm, -m) * g;
  return std::conj(acc);
}

}  // namespace

void emit_boundary_vortices(CylinderFlow& flow) {
  if (flow.n_colloc < 8) throw InvalidParameter("emit_boundary_vortices: need >= 8 collocation points");
  check_outside(flow, flow.vortices.pos);
  const int m = flow.n_colloc;
  const auto pts = wall_collocation_points(flow);
  const double re = flow.R + flow.emission_offset();

  // Current tangential slip from free stream + existing vortices (direct,
  // exact at these few points).
  std::vector<double> slip(m, 0.0);
  for (int i = 0; i < m; ++i) {
    cplx v = std::conj(freestream_conj(flow, pts[i]));
    for (std::size_t k = 0; k < flow.vortices.size(); ++k)
      v += pair_velocity(flow, pts[i], flow.vortices.pos[k], flow.vortices.gamma[k]);
    const cplx unit = pts[i] / std::abs(pts[i]);
    slip[i] = (v * std::conj(unit)).imag();
  }

  Eigen::MatrixXd a(m, m);
  std::vector<cplx> epos(m);
  for (int j = 0; j < m; ++j) epos[j] = std::polar(re, kTwoPi * j / m);
  for (int i = 0; i < m; ++i) {
    const cplx unit = pts[i] / std::abs(pts[i]);
    for (int j = 0; j < m; ++j)
      a(i, j) = (pair_velocity(flow, pts[i], epos[j], 1.0) * std::conj(unit)).imag();
  }
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) rhs(i) = flow.omega_wall - slip[i];

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-13))
    throw EmissionFailure(rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity(),
                          "emit_boundary_vortices: singular influence matrix");
  Eigen::VectorXd gamma = lu.solve(rhs);
  if (!gamma.allFinite())
    throw EmissionFailure(1.0 / rcond, "emit_boundary_vortices: non-finite solution");

  for (int j = 0; j < m; ++j) {
    flow.vortices.pos.push_back(epos[j]);
    flow.vortices.gamma.push_back(gamma(j));
  }
}

void rk4_convect(CylinderFlow& flow, FmmEngine& engine) {
  const std::size_t n = flow.vortices.size();
  if (n == 0) return;
  check_outside(flow, flow.vortices.pos);
  const double dt = flow.vortices.dt;

  auto reflect = [&flow](std::vector<cplx> pos) {
    const double rmin = flow.R * (1.0 - 1e-12);
    const double rout = flow.R * (1.0 + 1e-9);
    for (cplx& z : pos) {
      const double r = std::abs(z);
      if (r < rmin) {
        z = r > 0.0 ? z * (rout / r) : cplx(rout, 0.0);
        ++flow.flagged_reflections;
      }
    }
    return pos;
  };

  const auto& x0 = flow.vortices.pos;
  auto stage = [&](const std::vector<cplx>& pos) {
    return cylinder_field_at(flow, engine, pos, pos, /*self_eval=*/true);
  };

  const auto k1 = stage(x0);
  std::vector<cplx> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x0[i] + 0.5 * dt * k1[i];
  const auto k2 = stage(reflect(std::move(xs)));
  xs.resize(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x0[i] + 0.5 * dt * k2[i];
  const auto k3 = stage(reflect(std::move(xs)));
  xs.resize(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x0[i] + dt * k3[i];
  const auto k4 = stage(reflect(std::move(xs)));

  std::vector<cplx> xn(n);
  for (std::size_t i = 0; i < n; ++i)
    xn[i] = x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  flow.vortices.pos = reflect(std::move(xn));
}

}  // namespace fmm::sims
