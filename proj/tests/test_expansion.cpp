#include <random>

#include "doctest.h"
#include "fmm/expansion.hpp"
#include "test_util.hpp"

using namespace fmm;

TEST_CASE("choose_p: table lookups and the closed form") {
  CHECK(choose_p_table(1e-6, 0.5) == 17);
  CHECK(choose_p_table(1e-8, 0.65) == 39);
  CHECK(choose_p_table(1e-6, 0.35) == 11);
  CHECK(choose_p_table(1e-7, 0.6) == 28);
  CHECK(choose_p_formula(1e-6, 0.5, 1.0) == 19);  // floor(6 ln10 / ln2)
  CHECK(choose_p_formula(0.9, 0.5, 1.0) == 1);    // clamped at 1
  CHECK_THROWS_AS(choose_p_formula(0.0, 0.5, 1.0), InvalidParameter);
  CHECK_THROWS_AS(choose_p_formula(1e-6, 1.5, 1.0), InvalidParameter);
  CHECK_THROWS_AS(choose_p_formula(1e-6, 0.5, -1.0), InvalidParameter);
  CHECK_THROWS_AS(choose_p_table(2.0, 0.5), InvalidParameter);
}

TEST_CASE("p2m closed forms") {
  const cplx c(0.3, -0.2);
  SUBCASE("single source at the center, harmonic") {
    std::vector<cplx> z{c}, m{cplx(1, 0)};
    Expansion e = p2m(c, z, m, Kernel::harmonic, 4);
    CHECK(e.coeffs[0] == cplx(-1, 0));
    for (int k = 1; k <= 4; ++k) CHECK(e.coeffs[k] == cplx(0, 0));
  }
  SUBCASE("opposite strengths cancel the logarithmic monopole") {
    std::vector<cplx> z{c + cplx(0.1, 0), c - cplx(0.1, 0)};
    std::vector<cplx> m{cplx(1, 0), cplx(-1, 0)};
    Expansion e = p2m(c, z, m, Kernel::logarithmic, 3);
    CHECK(std::abs(e.coeffs[0]) == 0.0);
  }
  SUBCASE("m=2 offset by 0.1") {
    std::vector<cplx> z{c + cplx(0.1, 0)}, m{cplx(2, 0)};
    Expansion e = p2m(c, z, m, Kernel::harmonic, 2);
    CHECK(std::abs(e.coeffs[0] - cplx(-2, 0)) < 1e-15);
    CHECK(std::abs(e.coeffs[1] - cplx(-0.2, 0)) < 1e-15);
    CHECK(std::abs(e.coeffs[2] - cplx(-0.02, 0)) < 1e-15);
  }
}

TEST_CASE("m2m is exact and linear") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (Kernel kernel : {Kernel::harmonic, Kernel::logarithmic}) {
    for (int trial = 0; trial < 50; ++trial) {
      const int p = 12;
      std::vector<cplx> z(20), m(20);
      const cplx c0(uni(rng), uni(rng));
      for (auto& v : z) v = c0 + 0.3 * cplx(uni(rng), uni(rng));
      for (auto& v : m) v = cplx(uni(rng), uni(rng));
      Expansion child = p2m(c0, z, m, kernel, p);

      // zero shift is the identity
      Expansion same = m2m(child, c0);
      for (int k = 0; k <= p; ++k) CHECK(std::abs(same.coeffs[k] - child.coeffs[k]) <= 1e-14);

      const cplx c1 = c0 + cplx(uni(rng), uni(rng));
      Expansion shifted = m2m(child, c1);
      Expansion direct = p2m(c1, z, m, kernel, p);
      for (int k = 0; k <= p; ++k) {
        const double scale = std::max(1.0, std::abs(direct.coeffs[k]));
        CHECK(std::abs(shifted.coeffs[k] - direct.coeffs[k]) <= 1e-12 * scale);
      }
    }
  }
}

TEST_CASE("children m2m sum equals the parent p2m") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int p = 10;
  std::vector<cplx> za(8), ma(8), zb(8), mb(8);
  const cplx ca(0.2, 0.2), cb(0.8, 0.7), cp(0.5, 0.45);
  for (int i = 0; i < 8; ++i) {
    za[i] = ca + 0.15 * cplx(uni(rng), uni(rng));
    zb[i] = cb + 0.15 * cplx(uni(rng), uni(rng));
    ma[i] = cplx(uni(rng), uni(rng));
    mb[i] = cplx(uni(rng), uni(rng));
  }
  for (Kernel kernel : {Kernel::harmonic, Kernel::logarithmic}) {
    Expansion sa = m2m(p2m(ca, za, ma, kernel, p), cp);
    Expansion sb = m2m(p2m(cb, zb, mb, kernel, p), cp);
    std::vector<cplx> zu = za, mu = ma;
    zu.insert(zu.end(), zb.begin(), zb.end());
    mu.insert(mu.end(), mb.begin(), mb.end());
    Expansion whole = p2m(cp, zu, mu, kernel, p);
    for (int k = 0; k <= p; ++k) {
      const double scale = std::max(1.0, std::abs(whole.coeffs[k]));
      CHECK(std::abs(sa.coeffs[k] + sb.coeffs[k] - whole.coeffs[k]) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("m2l basics") {
  SUBCASE("zero outgoing gives zero local") {
    Expansion out;
    out.center = cplx(0, 0);
    out.coeffs.assign(9, cplx(0, 0));
    Expansion loc = m2l(out, cplx(5, 0), 8);
    for (auto& c : loc.coeffs) CHECK(std::abs(c) == 0.0);
  }
  SUBCASE("coincident centers are singular") {
    Expansion out;
    out.center = cplx(1, 1);
    out.coeffs.assign(5, cplx(1, 0));
    CHECK_THROWS_AS(m2l(out, cplx(1, 1), 4), SingularConfiguration);
  }
  SUBCASE("strength scaling is linear") {
    std::vector<cplx> z{cplx(0.05, -0.02)}, m{cplx(0.7, 0.1)};
    Expansion out = p2m(cplx(0, 0), z, m, Kernel::harmonic, 10);
    std::vector<cplx> m2{cplx(1.4, 0.2)};
    Expansion out2 = p2m(cplx(0, 0), z, m2, Kernel::harmonic, 10);
    Expansion l1 = m2l(out, cplx(4, 1), 10);
    Expansion l2 = m2l(out2, cplx(4, 1), 10);
    for (int k = 0; k <= 10; ++k)
      CHECK(std::abs(l2.coeffs[k] - 2.0 * l1.coeffs[k]) <=
            1e-13 * std::max(1.0, std::abs(l1.coeffs[k])));
  }
  SUBCASE("single source local field matches the kernel at table accuracy") {
    // theta = 0.5 separation geometry, p = 17 (tol 1e-6 table row)
    for (Kernel kernel : {Kernel::harmonic, Kernel::logarithmic}) {
      std::vector<cplx> z{cplx(0.3, 0.25)}, m{cplx(1, 0)};
      const cplx cs(0.25, 0.25), ct(2.25, 0.25);
      Expansion out = p2m(cs, z, m, kernel, 17);
      Expansion loc = m2l(out, ct, 17);
      const cplx y = ct + cplx(0.2, -0.15);
      const cplx approx = eval_local(loc, y);
      const cplx exact = kernel_term(kernel, y, z[0], m[0]);
      CHECK(std::abs(approx - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("l2l exactness") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int p = 14;
  Expansion loc;
  loc.kind = Expansion::Kind::ingoing;
  loc.center = cplx(0.5, -0.5);
  loc.coeffs.resize(p + 1);
  for (auto& c : loc.coeffs) c = cplx(uni(rng), uni(rng));

  Expansion same = l2l(loc, loc.center);
  for (int k = 0; k <= p; ++k) CHECK(std::abs(same.coeffs[k] - loc.coeffs[k]) <= 1e-14);

  const cplx shift(0.3, 0.22);
  Expansion moved = l2l(loc, loc.center + shift);
  for (int t = 0; t < 10; ++t) {
    const cplx y = loc.center + 0.4 * cplx(uni(rng), uni(rng));
    const cplx a = eval_local(loc, y), b = eval_local(moved, y);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
  Expansion back = l2l(moved, loc.center);
  for (int k = 0; k <= p; ++k)
    CHECK(std::abs(back.coeffs[k] - loc.coeffs[k]) <=
          1e-12 * std::max(1.0, std::abs(loc.coeffs[k])));
}

TEST_CASE("l2p") {
  Expansion loc;
  loc.kind = Expansion::Kind::ingoing;
  loc.center = cplx(1, 2);
  loc.coeffs = {cplx(3.5, -1.0), cplx(0, 0), cplx(0, 0)};
  std::vector<cplx> pts{cplx(1.1, 2.0), cplx(0.9, 1.95)};
  auto vals = l2p(loc, pts);
  for (auto& v : vals) CHECK(std::abs(v - cplx(3.5, -1.0)) == 0.0);
  CHECK(l2p(loc, std::span<const cplx>{}).empty());
}

TEST_CASE("m2m/l2l translation identities over 1000 random trials") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int p = 8;
  for (int trial = 0; trial < 1000; ++trial) {
    const Kernel kernel = trial % 2 ? Kernel::logarithmic : Kernel::harmonic;
    const cplx c0(uni(rng), uni(rng));
    std::vector<cplx> z(5), m(5);
    for (auto& v : z) v = c0 + 0.25 * cplx(uni(rng), uni(rng));
    for (auto& v : m) v = cplx(uni(rng), uni(rng));
    const cplx c1 = c0 + 0.8 * cplx(uni(rng), uni(rng));

    Expansion via = m2m(p2m(c0, z, m, kernel, p), c1);
    Expansion direct = p2m(c1, z, m, kernel, p);
    for (int k = 0; k <= p; ++k)
      CHECK(std::abs(via.coeffs[k] - direct.coeffs[k]) <=
            1e-12 * std::max(1.0, std::abs(direct.coeffs[k])));

    Expansion loc;
    loc.kind = Expansion::Kind::ingoing;
    loc.center = c0;
    loc.coeffs.resize(p + 1);
    double dk = 1.0;
    for (auto& c : loc.coeffs) {
      c = cplx(uni(rng), uni(rng)) * dk;
      dk /= 2.5;  // decay of a local built against a well-separated box
    }
    const cplx s(0.5 * uni(rng), 0.5 * uni(rng));
    Expansion fwd = l2l(loc, c0 + s);
    Expansion back = l2l(fwd, c0);
    for (int k = 0; k <= p; ++k)
      CHECK(std::abs(back.coeffs[k] - loc.coeffs[k]) <=
            1e-12 * std::max(1.0, std::abs(loc.coeffs[k])));
  }
}

TEST_CASE("m2l truncation error decays with p") {
  // Fixed well-separated configuration; error should fall monotonically with
  // p up to 10% jitter, until it hits the floating-point floor.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<cplx> z(12), m(12);
  const cplx cs(0, 0), ct(2.0, 0.4);
  for (auto& v : z) v = cs + 0.45 * cplx(uni(rng), uni(rng));
  for (auto& v : m) v = cplx(uni(rng), uni(rng));
  std::vector<cplx> ys(24);
  for (auto& y : ys) y = ct + 0.42 * cplx(uni(rng), uni(rng));
  std::vector<cplx> exact(ys.size(), cplx(0, 0));
  for (std::size_t i = 0; i < ys.size(); ++i)
    for (std::size_t j = 0; j < z.size(); ++j) exact[i] += -m[j] / (ys[i] - z[j]);

  double prev = 1e300;
  for (int p = 4; p <= 40; ++p) {
    Expansion out = p2m(cs, z, m, Kernel::harmonic, p);
    Expansion loc = m2l(out, ct, p);
    double err = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i)
      err = std::max(err, std::abs(eval_local(loc, ys[i]) - exact[i]));
    if (prev > 5e-15 && err > 5e-15) CHECK(err <= prev * 1.10);
    prev = err;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("operator linearity in the strengths") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double alpha = 3.25;
  std::vector<cplx> z(16), m(16), ma(16);
  for (auto& v : z) v = cplx(uni(rng), uni(rng)) * 0.4;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = cplx(uni(rng), uni(rng));
    ma[i] = alpha * m[i];
  }
  const int p = 12;
  for (Kernel kernel : {Kernel::harmonic, Kernel::logarithmic}) {
    Expansion e1 = p2m(cplx(0, 0), z, m, kernel, p);
    Expansion e2 = p2m(cplx(0, 0), z, ma, kernel, p);
    Expansion l1 = m2l(e1, cplx(3, 1), p);
    Expansion l2 = m2l(e2, cplx(3, 1), p);
    for (int k = 0; k <= p; ++k) {
      CHECK(std::abs(e2.coeffs[k] - alpha * e1.coeffs[k]) <=
            1e-13 * std::max(1.0, std::abs(e1.coeffs[k]) * alpha));
      CHECK(std::abs(l2.coeffs[k] - alpha * l1.coeffs[k]) <=
            1e-13 * std::max(1.0, std::abs(l1.coeffs[k]) * alpha));
    }
  }
}

TEST_CASE("p2p_direct") {
  SUBCASE("single pair") {
    SourceSet s;
    s.z = {cplx(1, 0)};
    s.m = {cplx(1, 0)};
    EvalSet e = EvalSet::at({cplx(0, 0)});
    auto out = p2p_direct(e, s, Kernel::harmonic);
    CHECK(out[0] == cplx(1, 0));  // -1/(0-1)
  }
  SUBCASE("self pairs are skipped") {
    SourceSet s;
    s.z = {cplx(0, 0), cplx(1, 0)};
    s.m = {cplx(1, 0), cplx(1, 0)};
    EvalSet e = EvalSet::self_of(s);
    auto out = p2p_direct(e, s, Kernel::harmonic);
    CHECK(std::abs(out[0] - cplx(1, 0)) < 1e-15);
    CHECK(std::abs(out[1] - cplx(-1, 0)) < 1e-15);
  }
  SUBCASE("matches the independent oracle") {
    SourceSet s = testutil::random_sources(100, 31);
    EvalSet e = EvalSet::self_of(s);
    for (Kernel kernel : {Kernel::harmonic, Kernel::logarithmic}) {
      auto got = p2p_direct(e, s, kernel);
      auto want = testutil::direct_oracle(e.y, e.source_id, s.z, s.m, kernel);
      CHECK(testutil::max_diff(got, want) <= 1e-14 * testutil::max_abs(want));
    }
  }
  SUBCASE("non-finite input") {
    SourceSet s;
    s.z = {cplx(std::numeric_limits<double>::infinity(), 0)};
    s.m = {cplx(1, 0)};
    CHECK_THROWS_AS(p2p_direct(EvalSet::at({cplx(0, 0)}), s, Kernel::harmonic), InvalidInput);
  }
}

TEST_CASE("smoother factors") {
  Smoother g = Smoother::gaussian(0.5);
  CHECK(smoother_factor(g, 0.0) == 0.0);
  CHECK(smoother_factor(g, 100.0) == doctest::Approx(1.0));
  CHECK(smoother_factor(g, 0.5) == doctest::Approx(1.0 - std::exp(-1.0)));
  Smoother pl = Smoother::plummer(0.1);
  CHECK(smoother_factor(pl, 0.0) == 0.0);
  // |m/w| * factor == m / sqrt(delta^2 + r^2)
  const double r = 1e-6;
  CHECK(smoother_factor(pl, r) / r == doctest::Approx(1.0 / std::sqrt(0.01 + r * r)));
  CHECK(smoother_factor(Smoother::none(), 0.123) == 1.0);
}
