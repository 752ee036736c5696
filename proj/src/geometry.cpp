#include "fmm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fmm {

bool theta_criterion(const MBox& a, const MBox& b, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("theta_criterion: theta outside (0,1)");
  const double big = std::max(a.radius, b.radius);
  const double small = std::min(a.radius, b.radius);
  const double d = std::abs(a.center - b.center);
  return big + theta * small <= theta * d;
}

namespace {

struct Splitter {
  const SourceSet& src;
  const EvalSet& evl;
  std::vector<std::uint32_t>& perm;
  std::vector<std::uint32_t>& eperm;

  double coord(std::uint32_t orig, bool along_x) const {
    return along_x ? src.z[orig].real() : src.z[orig].imag();
  }
  double ecoord(std::uint32_t orig, bool along_x) const {
    return along_x ? evl.y[orig].real() : evl.y[orig].imag();
  }

  // Splits perm[b,e) into low = first ceil(n/2) by (coordinate, original
  // index), reorders eperm[eb,ee) accordingly, and returns the split
  // positions. `fallback` supplies the split coordinate when the source
  // segment is empty.
  struct SplitPos {
    std::uint32_t mid;
    std::uint32_t emid;
  };
  SplitPos split(std::uint32_t b, std::uint32_t e, std::uint32_t eb, std::uint32_t ee,
                 bool along_x, double fallback) {
    const std::uint32_t n = e - b;
    double split_value = fallback;
    std::uint32_t mid = b;
    if (n > 0) {
      const std::uint32_t k = (n + 1) / 2;  // lower half gets the extra point
      mid = b + k;
      auto cmp = [&](std::uint32_t lhs, std::uint32_t rhs) {
        const double cl = coord(lhs, along_x), cr = coord(rhs, along_x);
        if (cl != cr) return cl < cr;
        return lhs < rhs;
      };
      std::nth_element(perm.begin() + b, perm.begin() + (mid - 1), perm.begin() + e, cmp);
      split_value = coord(perm[mid - 1], along_x);
    }
    auto elow = [&](std::uint32_t idx) { return ecoord(idx, along_x) <= split_value; };
    auto emid_it = std::stable_partition(eperm.begin() + eb, eperm.begin() + ee, elow);
    return {mid, static_cast<std::uint32_t>(emid_it - eperm.begin())};
  }
};

MBox make_box(const SourceSet& src, const EvalSet& evl, const std::vector<std::uint32_t>& perm,
              const std::vector<std::uint32_t>& eperm, int level, std::uint32_t index,
              std::uint32_t b, std::uint32_t e, std::uint32_t eb, std::uint32_t ee,
              cplx parent_center) {
  MBox box;
  box.level = level;
  box.index_in_level = index;
  box.point_begin = b;
  box.point_end = e;
  box.eval_begin = eb;
  box.eval_end = ee;
  if (b == e && eb == ee) {
    box.center = parent_center;  // empty box: zero extent at the parent center
    return box;
  }
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (std::uint32_t i = b; i < e; ++i) {
    const cplx z = src.z[perm[i]];
    xmin = std::min(xmin, z.real());
    xmax = std::max(xmax, z.real());
    ymin = std::min(ymin, z.imag());
    ymax = std::max(ymax, z.imag());
  }
  for (std::uint32_t i = eb; i < ee; ++i) {
    const cplx y = evl.y[eperm[i]];
    xmin = std::min(xmin, y.real());
    xmax = std::max(xmax, y.real());
    ymin = std::min(ymin, y.imag());
    ymax = std::max(ymax, y.imag());
  }
  box.center = cplx(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
  box.half_width = 0.5 * (xmax - xmin);
  box.half_height = 0.5 * (ymax - ymin);
  box.radius = std::hypot(box.half_width, box.half_height);
  return box;
}

}  // namespace

Pyramid build_pyramid(const SourceSet& sources, const EvalSet& evals, int n_levels, int threads) {
  if (n_levels < 1) throw InvalidParameter("build_pyramid: n_levels must be >= 1");
  if (sources.size() == 0) throw InvalidInput("build_pyramid: empty source set");
  for (const cplx& z : sources.z)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw InvalidInput("build_pyramid: non-finite source position");
  for (const cplx& y : evals.y)
    if (!std::isfinite(y.real()) || !std::isfinite(y.imag()))
      throw InvalidInput("build_pyramid: non-finite eval position");

  Pyramid pyr;
  pyr.n_levels = n_levels;
  pyr.perm.resize(sources.size());
  pyr.eval_perm.resize(evals.size());
  for (std::uint32_t i = 0; i < pyr.perm.size(); ++i) pyr.perm[i] = i;
  for (std::uint32_t i = 0; i < pyr.eval_perm.size(); ++i) pyr.eval_perm[i] = i;

  pyr.levels.resize(n_levels);
  pyr.levels[0].push_back(make_box(sources, evals, pyr.perm, pyr.eval_perm, 0, 0, 0,
                                   static_cast<std::uint32_t>(sources.size()), 0,
                                   static_cast<std::uint32_t>(evals.size()), cplx(0, 0)));

  Splitter sp{sources, evals, pyr.perm, pyr.eval_perm};
  for (int l = 1; l < n_levels; ++l) {
    const auto& parents = pyr.levels[l - 1];
    auto& kids = pyr.levels[l];
    kids.resize(parents.size() * 4);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (std::int64_t pi = 0; pi < static_cast<std::int64_t>(parents.size()); ++pi) {
      const MBox& p = parents[pi];
      auto [mx, emx] = sp.split(p.point_begin, p.point_end, p.eval_begin, p.eval_end,
                                /*along_x=*/true, p.center.real());
      auto [myl, emyl] = sp.split(p.point_begin, mx, p.eval_begin, emx,
                                  /*along_x=*/false, p.center.imag());
      auto [myh, emyh] = sp.split(mx, p.point_end, emx, p.eval_end,
                                  /*along_x=*/false, p.center.imag());
      const std::uint32_t sb[5] = {p.point_begin, myl, mx, myh, p.point_end};
      const std::uint32_t eb[5] = {p.eval_begin, emyl, emx, emyh, p.eval_end};
      for (int c = 0; c < 4; ++c) {
        const std::uint32_t ci = static_cast<std::uint32_t>(pi) * 4 + c;
        kids[ci] = make_box(sources, evals, pyr.perm, pyr.eval_perm, l, ci, sb[c], sb[c + 1],
                            eb[c], eb[c + 1], p.center);
      }
    }
  }

  // Canonical order inside each finest box so downstream sums are
  // independent of nth_element's internal ordering.
  auto& fine = pyr.levels[n_levels - 1];
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(fine.size()); ++i)
    std::sort(pyr.perm.begin() + fine[i].point_begin, pyr.perm.begin() + fine[i].point_end);

  return pyr;
}

LevelConn classify_level(const LevelConn& parent, const Pyramid& pyramid, int level,
                         double theta) {
  LevelConn conn;
  if (level == 0) {
    conn.strong.resize(1);
    conn.weak.resize(1);
    conn.strong[0].push_back(0);
    return conn;
  }
  if (level < 1 || level >= pyramid.n_levels)
    throw InvalidParameter("classify_level: level out of range");

  const auto& boxes = pyramid.levels[level];
  conn.strong.resize(boxes.size());
  conn.weak.resize(boxes.size());

  const std::size_t n_parents = pyramid.levels[level - 1].size();
  for (std::uint32_t p = 0; p < n_parents; ++p) {
    for (std::uint32_t q : parent.strong[p]) {
      if (q < p) continue;  // unordered parent pairs, symmetry handled below
      for (std::uint32_t a = 4 * p; a < 4 * p + 4; ++a) {
        for (std::uint32_t b = 4 * q; b < 4 * q + 4; ++b) {
          if (p == q && b < a) continue;
          if (a == b) {
            conn.strong[a].push_back(a);
            continue;
          }
          if (theta_criterion(boxes[a], boxes[b], theta)) {
            conn.weak[a].push_back(b);
            conn.weak[b].push_back(a);
          } else {
            conn.strong[a].push_back(b);
            conn.strong[b].push_back(a);
          }
        }
      }
    }
  }
  for (auto& v : conn.strong) std::sort(v.begin(), v.end());
  for (auto& v : conn.weak) std::sort(v.begin(), v.end());
  return conn;
}

Connectivity build_connectivity(const Pyramid& pyramid, double theta) {
  Connectivity conn;
  conn.levels.resize(pyramid.n_levels);
  conn.levels[0] = classify_level(LevelConn{}, pyramid, 0, theta);
  for (int l = 1; l < pyramid.n_levels; ++l)
    conn.levels[l] = classify_level(conn.levels[l - 1], pyramid, l, theta);
  return conn;
}

}  // namespace fmm
