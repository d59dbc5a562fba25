#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fungi/rng.hpp"
#include "fungi/types.hpp"

namespace fungi {

// Per-stage generation parameters: structure count, branching depth, initial
// branch length/width with geometric per-depth decay, spore radius, the tree
// arity and the fraction of previous-stage structures mixed into the image.
struct StageParams {
  int n_structures = 1;
  int branch_depth = 0;        // 0 for the spore stage
  double branch_length = 0.0;  // px, decays as length_decay^depth
  double branch_width = 0.0;   // px, decays as width_decay^depth
  double length_decay = 0.7;   // alpha in (0, 1]
  double width_decay = 0.8;    // beta in (0, 1]
  double spore_radius = 3.0;   // px
  int fanout = 2;              // children per node per depth level
  double overlap_fraction = 0.15;   // in [0, 1)
  double angle_jitter = kPi / 5.0;  // child angle deviation bound, radians

  void validate(StageClass stage) const;  // throws ConfigError
};

struct Canvas {
  int width = 64;
  int height = 64;
};

struct Circle {
  double x = 0, y = 0;
  double radius = 0;
};

struct BranchSegment {
  double x0 = 0, y0 = 0;
  double x1 = 0, y1 = 0;
  double width = 0;
  int depth = 0;      // >= 1; root-level branches have depth 1
  double angle = 0;   // radians
};

// Geometric scene for one image, prior to rasterization. Segment endpoints
// keep their nominal geometry even when they leave the canvas (the
// rasterizer clips), so per-depth length/width stay exact.
struct StructureGraph {
  StageClass stage = StageClass::Spore;
  std::uint64_t seed = 0;
  std::vector<Circle> circles;
  std::vector<BranchSegment> segments;
  std::vector<std::string> warnings;

  int max_segment_depth() const;

  // Line-oriented text record, one circle/segment per line, fixed field
  // order, 6-decimal fixed point. Used for byte-exact determinism checks.
  std::string serialize() const;
};

// Scatters n_structures circles of radius spore_radius uniformly inside the
// margin-inset canvas [r, w-r) x [r, h-r). Draw order per structure: x, then
// y (a contract the re-draw oracle relies on). No segments.
StructureGraph generate_spore(const StageParams& params, Rng& rng, Canvas canvas);

// Central circle per structure plus a recursive branch tree: every node
// spawns `fanout` children per depth level d = 1..branch_depth, each of
// length branch_length*length_decay^d and width branch_width*width_decay^d.
// Depth-1 angles are uniform in [0, 2pi); deeper angles jitter around the
// parent by +-angle_jitter. Children are emitted depth-first.
StructureGraph generate_branching(const StageParams& params, StageClass stage,
                                  Rng& rng, Canvas canvas);

using StageParamsTable = std::map<StageClass, StageParams>;

StageParamsTable default_stage_params();

// Stage graph plus ceil(overlap_fraction * n_structures) trailing structures
// from the previous stage's generator; the spore stage has no overlay.
StructureGraph generate_stage(StageClass stage, const StageParamsTable& params_by_stage,
                              Rng& rng, Canvas canvas);

}  // namespace fungi
