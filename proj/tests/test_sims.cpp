#include <cmath>

#include "doctest.h"
#include "fmm/sims.hpp"
#include "test_util.hpp"

using namespace fmm;
using namespace fmm::sims;

namespace {

FmmConfig sim_config(int n_levels = 3) {
  FmmConfig cfg;
  cfg.theta = 0.5;
  cfg.n_levels = n_levels;
  cfg.tol = 1e-6;
  cfg.p_rule = PRule::table;
  cfg.backend = BackendKind::serial;
  return cfg;
}

constexpr double kTwoPi = 2.0 * M_PI;

// Direct velocity sum of the smoothed vortex interaction, written
// independently of the engine path.
std::vector<cplx> vortex_oracle(const std::vector<cplx>& x, const std::vector<double>& g,
                                double delta) {
  std::vector<cplx> v(x.size(), cplx(0, 0));
  for (std::size_t k = 0; k < x.size(); ++k) {
    cplx acc(0, 0);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j == k) continue;
      const cplx dzb = std::conj(x[k]) - std::conj(x[j]);
      const double r = std::abs(x[k] - x[j]);
      acc += g[j] / dzb * (1.0 - std::exp(-r * r / (delta * delta)));
    }
    v[k] = acc / cplx(0.0, kTwoPi);
  }
  return v;
}

}  // namespace

TEST_CASE("gaussian smoother values") {
  CHECK(smoother(0.0, 0.5) == 0.0);
  CHECK(smoother(1e6, 0.5) == doctest::Approx(1.0));
  CHECK(smoother(0.5, 0.5) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(smoother(1.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(smoother(-1.0, 0.5), InvalidParameter);
}

TEST_CASE("shear layer initialization") {
  VortexSystem sys = init_shear_layer(4, 4.0, 0.7);
  CHECK(sys.size() == 4);
  int pos = 0, neg = 0;
  for (double g : sys.gamma) (g > 0 ? pos : neg)++;
  CHECK(pos == 2);
  CHECK(neg == 2);
  CHECK(sys.total_circulation() == 0.0);

  VortexSystem big = init_shear_layer(16000, 8.0, 1e-4);
  CHECK(big.size() == 16000);
  CHECK(big.total_circulation() == 0.0);
  CHECK_THROWS_AS(init_shear_layer(7, 4.0, 1.0), InvalidParameter);
}

TEST_CASE("vortex velocities") {
  SUBCASE("single vortex does not move itself") {
    VortexSystem sys;
    sys.pos = {cplx(0.3, 0.4)};
    sys.gamma = {2.0};
    sys.delta = 0.1;
    FmmEngine eng(sim_config(1));
    auto v = vortex_velocities(sys, eng);
    CHECK(std::abs(v[0]) == 0.0);
  }
  SUBCASE("opposite pair translates together") {
    const double d = 2.0, gamma = 1.5, delta = 0.05;
    VortexSystem sys;
    sys.pos = {cplx(0, 0), cplx(d, 0)};
    sys.gamma = {gamma, -gamma};
    sys.delta = delta;
    FmmEngine eng(sim_config(1));
    auto v = vortex_velocities(sys, eng);
    CHECK(std::abs(v[0] - v[1]) <= 1e-14);
    const double speed = gamma * smoother(d, delta) / (kTwoPi * d);
    CHECK(std::abs(v[0]) == doctest::Approx(speed).epsilon(1e-12));
  }
  SUBCASE("fmm matches the direct smoothed sum at N=2000") {
    VortexSystem sys = init_shear_layer(2000, 6.0, 1.0 / 2000);
    FmmEngine eng(sim_config(4));
    auto got = vortex_velocities(sys, eng);
    auto want = vortex_oracle(sys.pos, sys.gamma, sys.delta);
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      err = std::max(err, std::abs(got[i] - want[i]));
      scale = std::max(scale, std::abs(want[i]));
    }
    CHECK(err <= 1e-6 * scale);
  }
}

TEST_CASE("euler step") {
  VortexSystem sys;
  sys.pos = {cplx(0, 0), cplx(1, 1)};
  sys.gamma = {1.0, 1.0};
  sys.dt = 0.01;
  SUBCASE("zero velocities leave positions") {
    auto before = sys.pos;
    euler_step(sys, {cplx(0, 0), cplx(0, 0)});
    CHECK(sys.pos == before);
  }
  SUBCASE("uniform velocity shifts by v dt") {
    euler_step(sys, {cplx(1, 0), cplx(1, 0)});
    CHECK(sys.pos[0] == cplx(0.01, 0.0));
  }
  SUBCASE("co-rotating pair separation grows at O(dt^2) per step") {
    VortexSystem pair;
    const double d = 1.0;
    pair.pos = {cplx(0, 0), cplx(d, 0)};
    pair.gamma = {1.0, 1.0};
    pair.delta = 1e-6;
    pair.dt = 1e-3;
    FmmEngine eng(sim_config(1));
    auto v = vortex_velocities(pair, eng);
    euler_step(pair, v);
    const double d1 = std::abs(pair.pos[1] - pair.pos[0]);
    const double speed = 1.0 / (kTwoPi * d);
    CHECK(std::abs(d1 - d) <= 2.0 * (speed * pair.dt) * (speed * pair.dt) / d);
  }
}

TEST_CASE("circulation is conserved by convection") {
  VortexSystem sys = init_shear_layer(64, 4.0, 0.01);
  const double total0 = sys.total_circulation();
  FmmEngine eng(sim_config(2));
  for (int s = 0; s < 5; ++s) euler_step(sys, vortex_velocities(sys, eng));
  CHECK(sys.total_circulation() == total0);
}

TEST_CASE("gravity forces") {
  SUBCASE("two equal masses attract with equal and opposite accelerations") {
    GravitySystem sys;
    sys.pos = {cplx(0, 0), cplx(1, 0)};
    sys.vel = {cplx(0, 0), cplx(0, 0)};
    sys.mass = {0.5, 0.5};
    sys.G = 2.0;
    sys.delta = 0.01;
    FmmEngine eng(sim_config(1));
    auto a = gravity_forces(sys, eng);
    CHECK(std::abs(a[0] + a[1]) <= 1e-15);
    const double want = 2.0 * 0.5 / std::sqrt(0.01 * 0.01 + 1.0);
    CHECK(std::abs(a[0]) == doctest::Approx(want).epsilon(1e-12));
    CHECK(a[0].real() > 0);  // toward the other mass
  }
  SUBCASE("smoothed magnitude stays G m / delta as r -> 0") {
    GravitySystem sys;
    sys.pos = {cplx(0, 0), cplx(1e-9, 0)};
    sys.vel = {cplx(0, 0), cplx(0, 0)};
    sys.mass = {1.0, 1.0};
    sys.delta = 0.05;
    FmmEngine eng(sim_config(1));
    auto a = gravity_forces(sys, eng);
    CHECK(std::isfinite(a[0].real()));
    CHECK(std::abs(a[0]) <= 1.0 / 0.05 * (1 + 1e-6));
    CHECK(std::abs(a[0]) == doctest::Approx(1.0 / 0.05).epsilon(1e-4));
  }
  SUBCASE("fmm matches the direct smoothed sum") {
    GravitySystem sys = init_rotating_disc(1000, 1.0, 0.5, 77);
    sys.delta = 2e-4;  // softening well below the box separation scale
    FmmEngine eng(sim_config(3));
    auto got = gravity_forces(sys, eng);
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
      cplx acc(0, 0);
      for (std::size_t j = 0; j < sys.size(); ++j) {
        if (i == j) continue;
        const cplx d = sys.pos[j] - sys.pos[i];
        const double r = std::abs(d);
        acc += sys.G * sys.mass[j] / std::sqrt(sys.delta * sys.delta + r * r) * d / r;
      }
      err = std::max(err, std::abs(got[i] - acc));
      scale = std::max(scale, std::abs(acc));
    }
    CHECK(err <= 1e-6 * scale);
  }
}

TEST_CASE("rotating disc initialization") {
  GravitySystem still = init_rotating_disc(500, 2.0, 0.0, 5);
  for (const cplx& v : still.vel) CHECK(std::abs(v) == 0.0);

  GravitySystem disc = init_rotating_disc(500, 2.0, 0.7, 5);
  double l = 0.0;
  for (std::size_t i = 0; i < disc.size(); ++i) {
    // z = x + iy, v = i w z: angular momentum m (x vy - y vx)
    l += disc.mass[i] * (disc.pos[i].real() * disc.vel[i].imag() -
                         disc.pos[i].imag() * disc.vel[i].real());
    CHECK(std::abs(disc.pos[i]) <= 2.0);
  }
  double expect = 0.0;
  for (std::size_t i = 0; i < disc.size(); ++i)
    expect += 0.7 * disc.mass[i] * std::norm(disc.pos[i]);
  CHECK(l == doctest::Approx(expect).epsilon(1e-12));
  CHECK(l > 0);

  GravitySystem again = init_rotating_disc(500, 2.0, 0.7, 5);
  CHECK(again.pos == disc.pos);
}

TEST_CASE("stormer-verlet") {
  SUBCASE("zero forces give rectilinear motion") {
    GravitySystem sys;
    sys.pos = {cplx(0, 0)};
    sys.vel = {cplx(1, 2)};
    sys.mass = {1.0};
    sys.dt = 0.25;
    FmmEngine eng(sim_config(1));
    auto acc = std::vector<cplx>{cplx(0, 0)};
    acc = stormer_verlet_step(sys, acc, eng);
    CHECK(std::abs(sys.pos[0] - cplx(0.25, 0.5)) <= 1e-15);
    CHECK(std::abs(sys.vel[0] - cplx(1, 2)) <= 1e-15);
  }
  SUBCASE("time reversal recovers the initial state") {
    GravitySystem sys = init_rotating_disc(64, 1.0, 0.6, 9);
    sys.dt = 1e-3;
    auto pos0 = sys.pos;
    auto vel0 = sys.vel;
    FmmEngine eng(sim_config(2));
    auto acc = gravity_forces(sys, eng);
    for (int s = 0; s < 50; ++s) acc = stormer_verlet_step(sys, acc, eng);
    for (auto& v : sys.vel) v = -v;
    acc = gravity_forces(sys, eng);
    for (int s = 0; s < 50; ++s) acc = stormer_verlet_step(sys, acc, eng);
    double perr = 0;
    for (std::size_t i = 0; i < sys.size(); ++i)
      perr = std::max(perr, std::abs(sys.pos[i] - pos0[i]));
    CHECK(perr <= 1e-10);
    (void)vel0;
  }
  SUBCASE("energy drift in a fixed central field is bounded") {
    // test-local reference integration, no FMM involved
    const double g = 1.0, delta = 0.1, dt = 1e-3;
    cplx z(1.0, 0.0), v(0.0, 0.8);
    auto accel = [&](cplx p) {
      const double r = std::abs(p);
      return -g / std::sqrt(delta * delta + r * r) * p / r;
    };
    auto energy = [&](cplx p, cplx w) {
      const double r = std::abs(p);
      return 0.5 * std::norm(w) + g * std::log(r + std::sqrt(delta * delta + r * r));
    };
    const double e0 = energy(z, v);
    cplx a = accel(z);
    double worst_first = 0, worst_all = 0;
    for (int s = 0; s < 10000; ++s) {
      v += 0.5 * dt * a;
      z += dt * v;
      a = accel(z);
      v += 0.5 * dt * a;
      const double drift = std::abs(energy(z, v) - e0);
      worst_all = std::max(worst_all, drift);
      if (s < 5000) worst_first = std::max(worst_first, drift);
    }
    CHECK(worst_all <= 1e-4);
    CHECK(worst_all <= 2.0 * worst_first + 1e-12);  // bounded, not growing
  }
}

TEST_CASE("gravity momentum drift stays within the FMM error budget") {
  GravitySystem sys = init_rotating_disc(256, 1.0, 0.4, 13);
  sys.dt = 2e-3;
  FmmEngine eng(sim_config(3));
  cplx p0(0, 0);
  for (std::size_t i = 0; i < sys.size(); ++i) p0 += sys.mass[i] * sys.vel[i];
  auto acc = gravity_forces(sys, eng);
  double max_force = 0;
  for (const cplx& a : acc) max_force = std::max(max_force, std::abs(a));
  const int steps = 1000;
  for (int s = 0; s < steps; ++s) acc = stormer_verlet_step(sys, acc, eng);
  cplx p1(0, 0);
  double total_mass = 0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    p1 += sys.mass[i] * sys.vel[i];
    total_mass += sys.mass[i];
  }
  const double budget =
      1e-6 * std::abs(p0) + 1e-6 * total_mass * max_force * sys.dt * steps * 10;
  CHECK(std::abs(p1 - p0) <= budget);
}

TEST_CASE("cylinder potential flow") {
  CylinderFlow flow;
  flow.R = 1.0;
  flow.V_inf = 2.0;
  flow.vortices.delta = 1e-3;
  FmmEngine eng(sim_config(1));
  SUBCASE("no vortices: free stream past the cylinder") {
    auto v = cylinder_field_at(flow, eng, {}, {cplx(2.0, 0.0), cplx(1.0, 0.0)}, false);
    CHECK(std::abs(v[0] - cplx(2.0 * (1 - 0.25), 0)) <= 1e-14);
    CHECK(std::abs(v[1]) <= 1e-14);  // stagnation at the wall on the axis
  }
  SUBCASE("wall is impermeable for the pure free stream") {
    auto rad = wall_radial_velocity(flow, eng);
    for (double r : rad) CHECK(std::abs(r) <= 1e-12 * flow.V_inf);
  }
  SUBCASE("vortex + mirror keep the wall impermeable") {
    flow.n_colloc = 16;
    flow.vortices.pos = {cplx(1.5, 0.7)};
    flow.vortices.gamma = {0.8};
    auto rad = wall_radial_velocity(flow, eng);
    for (double r : rad) CHECK(std::abs(r) <= 1e-10);
  }
  SUBCASE("vortex strictly inside is invalid") {
    flow.vortices.pos = {cplx(0.5, 0.0)};
    flow.vortices.gamma = {1.0};
    CHECK_THROWS_AS(cylinder_velocities(flow, eng), InvalidState);
  }
}

TEST_CASE("cylinder fmm evaluation matches the direct mirror sum") {
  CylinderFlow flow;
  flow.R = 1.0;
  flow.V_inf = 1.0;
  flow.vortices.delta = 0.01;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int n = 1000;
  for (int k = 0; k < n; ++k) {
    const double r = 1.1 + 1.5 * uni(rng);
    const double a = kTwoPi * uni(rng);
    flow.vortices.pos.push_back(std::polar(r, a));
    flow.vortices.gamma.push_back(uni(rng) - 0.5);
  }
  FmmEngine eng(sim_config(4));
  auto got = cylinder_velocities(flow, eng);

  // independent direct evaluation of the full mirror formula
  double err = 0, scale = 0;
  for (int i = 0; i < n; ++i) {
    const cplx x = flow.vortices.pos[i];
    cplx acc = flow.V_inf * (1.0 - 1.0 / (x * x));
    for (int k = 0; k < n; ++k) {
      const cplx xk = flow.vortices.pos[k];
      const cplx xm = 1.0 / std::conj(xk);
      const cplx mk = flow.vortices.gamma[k] / cplx(0, kTwoPi);
      if (k != i) {
        const double r = std::abs(x - xk);
        acc += -mk / (x - xk) * (1.0 - std::exp(-r * r / 1e-4));
      }
      const double rm = std::abs(x - xm);
      acc += mk / (x - xm) * (1.0 - std::exp(-rm * rm / 1e-4));
    }
    const cplx want = std::conj(acc);
    err = std::max(err, std::abs(got[i] - want));
    scale = std::max(scale, std::abs(want));
  }
  CHECK(err <= 1e-6 * scale);
}

TEST_CASE("boundary vortex emission") {
  SUBCASE("no slip anywhere emits nothing") {
    CylinderFlow flow;
    flow.V_inf = 0.0;
    flow.omega_wall = 0.0;
    flow.nu = 1e-3;
    flow.vortices.dt = 0.05;
    flow.vortices.delta = 0.25 * flow.emission_offset();
    emit_boundary_vortices(flow);
    REQUIRE(flow.vortices.size() == 64);
    for (double g : flow.vortices.gamma) CHECK(std::abs(g) <= 1e-12);
  }
  SUBCASE("free stream slip is cancelled at the collocation points") {
    CylinderFlow flow;
    flow.V_inf = 1.0;
    flow.nu = 1e-3;
    flow.vortices.dt = 0.05;
    flow.vortices.delta = 0.25 * flow.emission_offset();
    emit_boundary_vortices(flow);
    REQUIRE(flow.vortices.size() == 64);
    FmmEngine eng(sim_config(1));
    auto slip = wall_tangential_slip(flow, eng);
    for (double s : slip) CHECK(std::abs(s) <= 1e-8 * flow.V_inf);
    auto rad = wall_radial_velocity(flow, eng);
    for (double r : rad) CHECK(std::abs(r) <= 1e-6 * flow.V_inf);
  }
  SUBCASE("rotating wall with no stream emits net circulation") {
    CylinderFlow flow;
    flow.V_inf = 0.0;
    flow.omega_wall = 0.5;
    flow.nu = 1e-3;
    flow.vortices.dt = 0.05;
    flow.vortices.delta = 0.25 * flow.emission_offset();
    emit_boundary_vortices(flow);
    const double total = flow.vortices.total_circulation();
    CHECK(total > 0.1);  // proportional to the peripheral speed
    CylinderFlow faster = flow;
    faster.vortices.pos.clear();
    faster.vortices.gamma.clear();
    faster.omega_wall = 1.0;
    emit_boundary_vortices(faster);
    CHECK(faster.vortices.total_circulation() ==
          doctest::Approx(2.0 * total).epsilon(1e-6));
  }
  SUBCASE("degenerate smoothing makes the influence matrix singular") {
    CylinderFlow flow;
    flow.nu = 1e-3;
    flow.vortices.dt = 0.05;
    flow.vortices.delta = 1e300;  // g_delta rounds to 0 everywhere: no influence
    CHECK_THROWS_AS(emit_boundary_vortices(flow), EmissionFailure);
  }
  SUBCASE("too few collocation points") {
    CylinderFlow flow;
    flow.n_colloc = 4;
    CHECK_THROWS_AS(emit_boundary_vortices(flow), InvalidParameter);
  }
}

TEST_CASE("rk4 convection") {
  SUBCASE("zero vortices is a no-op") {
    CylinderFlow flow;
    FmmEngine eng(sim_config(1));
    rk4_convect(flow, eng);
    CHECK(flow.vortices.size() == 0);
  }
  SUBCASE("far vortex advects at the local field with O(dt^5) step error") {
    FmmEngine eng(sim_config(1));
    auto run = [&](double dt, int substeps) {
      CylinderFlow flow;
      flow.V_inf = 1.0;
      flow.vortices.delta = 1e-4;
      flow.vortices.pos = {cplx(6.0, 2.0)};
      flow.vortices.gamma = {0.4};
      flow.vortices.dt = dt / substeps;
      for (int s = 0; s < substeps; ++s) rk4_convect(flow, eng);
      return flow.vortices.pos[0];
    };
    const cplx ref = run(0.4, 256);
    const double e1 = std::abs(run(0.4, 1) - ref);
    const double e2 = std::abs(run(0.4, 2) - ref);
    CHECK(e1 <= 1e-6);
    CHECK(e1 / e2 >= 8.0);  // at least fourth order in the step size
  }
  SUBCASE("rk4 and euler trajectories differ at O(dt) globally") {
    FmmEngine eng(sim_config(1));
    const double total_time = 1.0;
    auto gap = [&](double dt) {
      CylinderFlow flow;
      flow.V_inf = 1.0;
      flow.vortices.delta = 1e-3;
      flow.vortices.pos = {cplx(1.8, 0.6), cplx(-1.4, -1.2)};
      flow.vortices.gamma = {0.5, -0.3};
      flow.vortices.dt = dt;
      CylinderFlow eflow = flow;
      const int steps = static_cast<int>(std::lround(total_time / dt));
      for (int s = 0; s < steps; ++s) {
        rk4_convect(flow, eng);
        auto v = cylinder_field_at(eflow, eng, eflow.vortices.pos, eflow.vortices.pos, true);
        euler_step(eflow.vortices, v);
      }
      double g = 0;
      for (std::size_t i = 0; i < flow.vortices.size(); ++i)
        g = std::max(g, std::abs(flow.vortices.pos[i] - eflow.vortices.pos[i]));
      return g;
    };
    const double g1 = gap(0.02), g2 = gap(0.01);
    CHECK(g1 / g2 >= 1.4);
    CHECK(g1 / g2 <= 2.8);
  }
  SUBCASE("stage positions inside the wall are reflected and flagged") {
    CylinderFlow flow;
    flow.V_inf = 1.0;
    flow.vortices.delta = 1e-3;
    // slow inflow region upstream of the wall; a huge step overshoots inside
    flow.vortices.pos = {cplx(-1.05, 0.0)};
    flow.vortices.gamma = {0.0};
    flow.vortices.dt = 10.0;
    FmmEngine eng(sim_config(1));
    rk4_convect(flow, eng);
    CHECK(flow.flagged_reflections > 0);
    CHECK(std::abs(flow.vortices.pos[0]) >= 1.0);
  }
}

TEST_CASE("shear layer clusters and spreads box sizes") {
  VortexSystem sys = init_shear_layer(400, 4.0, 4.0 * 2.0 / 400);
  FmmEngine eng(sim_config(3));
  auto ratio = [&]() {
    SourceSet s;
    s.z = sys.pos;
    s.m.assign(sys.size(), cplx(1, 0));
    Pyramid p = build_pyramid(s, EvalSet{}, 3);
    double lo = 1e300, hi = 0;
    for (const MBox& b : p.finest()) {
      if (b.n_points() == 0) continue;
      lo = std::min(lo, b.radius);
      hi = std::max(hi, b.radius);
    }
    return hi / std::max(lo, 1e-30);
  };
  std::vector<double> samples;
  samples.push_back(ratio());
  for (int s = 1; s <= 100; ++s) {
    euler_step(sys, vortex_velocities(sys, eng));
    if (s % 10 == 0) samples.push_back(ratio());
  }
  for (std::size_t i = 1; i < samples.size(); ++i) CHECK(samples[i] > samples[0]);
  CHECK(samples.back() > 1.5 * samples.front());
}
