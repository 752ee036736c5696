#pragma once

#include <cstdint>
#include <vector>

#include "fmm/types.hpp"

namespace fmm {

// Axis-aligned box in the balanced pyramid. Rectangles are shrunk to the
// tight bounding box of the contained source and evaluation points, so
// sibling boxes vary in size on non-uniform inputs.
struct MBox {
  cplx center{0.0, 0.0};
  double half_width = 0.0;
  double half_height = 0.0;
  double radius = 0.0;  // half diagonal = hypot(half_width, half_height)
  int level = 0;
  std::uint32_t index_in_level = 0;
  // [begin, end) into the level-permuted source / eval arrays. A box's range
  // covers its whole subtree; children partition the parent's range.
  std::uint32_t point_begin = 0, point_end = 0;
  std::uint32_t eval_begin = 0, eval_end = 0;

  std::uint32_t n_points() const { return point_end - point_begin; }
  std::uint32_t n_evals() const { return eval_end - eval_begin; }
};

// Balanced quad-tree of n_levels levels; level l holds exactly 4^l boxes and
// the children of box i at level l are boxes 4i..4i+3 at level l+1.
struct Pyramid {
  int n_levels = 0;
  std::vector<std::vector<MBox>> levels;
  std::vector<std::uint32_t> perm;       // source permutation (original indices)
  std::vector<std::uint32_t> eval_perm;  // eval permutation

  const std::vector<MBox>& finest() const { return levels.back(); }
  int finest_level() const { return n_levels - 1; }
};

// Per-level pairwise box relations. Strong and weak relations are symmetric;
// a box is always strongly connected to itself; boxes in neither list are
// decoupled (already resolved at a coarser level).
struct LevelConn {
  std::vector<std::vector<std::uint32_t>> strong;
  std::vector<std::vector<std::uint32_t>> weak;
};

struct Connectivity {
  std::vector<LevelConn> levels;

  const LevelConn& finest() const { return levels.back(); }
};

// Eq.-style well-separation test: true iff R + theta*r <= theta*d with
// R = max radius, r = min radius, d = center distance.
bool theta_criterion(const MBox& a, const MBox& b, double theta);

// Builds the balanced pyramid by median splitting: each box splits along x
// at the point-count median, then each half splits along y. Odd counts send
// the extra point to the lower half; coordinate ties break on original input
// index. Evaluation points are partitioned against the same split
// coordinates (<= split goes low).
Pyramid build_pyramid(const SourceSet& sources, const EvalSet& evals, int n_levels,
                      int threads = 1);

// Derives level `level` relations from the parent level: children of strong
// pairs stay strong unless the theta criterion promotes them to weak;
// children of weak pairs are decoupled. level == 0 returns the root
// relation (a single box, strong with itself).
LevelConn classify_level(const LevelConn& parent, const Pyramid& pyramid, int level,
                         double theta);

Connectivity build_connectivity(const Pyramid& pyramid, double theta);

}  // namespace fmm
