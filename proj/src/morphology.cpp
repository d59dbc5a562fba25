#include "fungi/morphology.hpp"

#include <cmath>
#include <cstdio>

#include "fungi/error.hpp"

namespace fungi {

namespace {

void check_canvas_fits_spore(const StageParams& params, Canvas canvas) {
  const double need = 4.0 * params.spore_radius;
  if (canvas.width < need || canvas.height < need) {
    throw DimensionError("canvas " + std::to_string(canvas.width) + "x" +
                         std::to_string(canvas.height) +
                         " too small for spore radius " + std::to_string(params.spore_radius));
  }
}

Circle draw_center(const StageParams& params, Rng& rng, Canvas canvas) {
  const double r = params.spore_radius;
  const double x = rng.uniform(r, canvas.width - r);
  const double y = rng.uniform(r, canvas.height - r);
  return Circle{x, y, r};
}

// Depth-first expansion of one branch tree rooted at (x, y).
void grow_branches(const StageParams& params, double x, double y, double parent_angle,
                   int depth, Rng& rng, std::vector<BranchSegment>& out) {
  if (depth > params.branch_depth) return;
  const double length = params.branch_length * std::pow(params.length_decay, depth);
  const double width = params.branch_width * std::pow(params.width_decay, depth);
  for (int child = 0; child < params.fanout; ++child) {
    const double angle = depth == 1
                             ? rng.uniform(0.0, 2.0 * kPi)
                             : parent_angle + rng.uniform(-params.angle_jitter, params.angle_jitter);
    const double x1 = x + length * std::cos(angle);
    const double y1 = y + length * std::sin(angle);
    out.push_back(BranchSegment{x, y, x1, y1, width, depth, angle});
    grow_branches(params, x1, y1, angle, depth + 1, rng, out);
  }
}

void append_fixed(std::string& out, double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  out += buf;
}

}  // namespace

void StageParams::validate(StageClass stage) const {
  if (n_structures <= 0) throw ConfigError("n_structures must be positive");
  if (stage == StageClass::Spore) {
    if (branch_depth != 0) throw ConfigError("spore stage requires branch_depth = 0");
  } else {
    if (branch_depth < 1)
      throw ConfigError(std::string(stage_name(stage)) + " stage requires branch_depth >= 1");
    if (branch_length <= 0) throw ConfigError("branch_length must be positive");
    if (branch_width <= 0) throw ConfigError("branch_width must be positive");
    if (fanout < 1) throw ConfigError("fanout must be >= 1");
  }
  if (length_decay <= 0 || length_decay > 1) throw ConfigError("length_decay must be in (0, 1]");
  if (width_decay <= 0 || width_decay > 1) throw ConfigError("width_decay must be in (0, 1]");
  if (spore_radius <= 0) throw ConfigError("spore_radius must be positive");
  if (overlap_fraction < 0 || overlap_fraction >= 1)
    throw ConfigError("overlap_fraction must be in [0, 1)");
  if (angle_jitter < 0) throw ConfigError("angle_jitter must be non-negative");
}

int StructureGraph::max_segment_depth() const {
  int depth = 0;
  for (const auto& s : segments) depth = std::max(depth, s.depth);
  return depth;
}

std::string StructureGraph::serialize() const {
  std::string out;
  out.reserve(64 + 32 * circles.size() + 96 * segments.size());
  out += "graph stage=";
  out += stage_name(stage);
  out += " seed=" + std::to_string(seed);
  out += " circles=" + std::to_string(circles.size());
  out += " segments=" + std::to_string(segments.size());
  out += " warnings=" + std::to_string(warnings.size());
  out += '\n';
  for (const auto& c : circles) {
    out += "c ";
    append_fixed(out, c.x);
    out += ' ';
    append_fixed(out, c.y);
    out += ' ';
    append_fixed(out, c.radius);
    out += '\n';
  }
  for (const auto& s : segments) {
    out += "s ";
    append_fixed(out, s.x0);
    out += ' ';
    append_fixed(out, s.y0);
    out += ' ';
    append_fixed(out, s.x1);
    out += ' ';
    append_fixed(out, s.y1);
    out += ' ';
    append_fixed(out, s.width);
    out += ' ';
    out += std::to_string(s.depth);
    out += ' ';
    append_fixed(out, s.angle);
    out += '\n';
  }
  for (const auto& w : warnings) {
    out += "w ";
    out += w;
    out += '\n';
  }
  return out;
}

StructureGraph generate_spore(const StageParams& params, Rng& rng, Canvas canvas) {
  params.validate(StageClass::Spore);
  check_canvas_fits_spore(params, canvas);
  StructureGraph graph;
  graph.stage = StageClass::Spore;
  graph.seed = rng.seed();
  graph.circles.reserve(static_cast<std::size_t>(params.n_structures));
  for (int i = 0; i < params.n_structures; ++i) {
    graph.circles.push_back(draw_center(params, rng, canvas));
  }
  return graph;
}

StructureGraph generate_branching(const StageParams& params, StageClass stage,
                                  Rng& rng, Canvas canvas) {
  if (stage == StageClass::Spore)
    throw ConfigError("generate_branching applies to hyphae and mycelium only");
  params.validate(stage);
  check_canvas_fits_spore(params, canvas);

  StructureGraph graph;
  graph.stage = stage;
  graph.seed = rng.seed();
  graph.circles.reserve(static_cast<std::size_t>(params.n_structures));
  const double tip_length =
      params.branch_length * std::pow(params.length_decay, params.branch_depth);
  if (tip_length < 0.5) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "degenerate branches: depth-%d length %.6f px below 0.5 px",
                  params.branch_depth, tip_length);
    graph.warnings.emplace_back(buf);
  }
  for (int i = 0; i < params.n_structures; ++i) {
    const Circle center = draw_center(params, rng, canvas);
    graph.circles.push_back(center);
    grow_branches(params, center.x, center.y, 0.0, 1, rng, graph.segments);
  }
  return graph;
}

StageParamsTable default_stage_params() {
  StageParamsTable table;
  StageParams spore;
  spore.n_structures = 30;
  spore.branch_depth = 0;
  spore.spore_radius = 3.0;
  table[StageClass::Spore] = spore;

  StageParams hyphae;
  hyphae.n_structures = 8;
  hyphae.branch_depth = 2;
  hyphae.branch_length = 12.0;
  hyphae.branch_width = 3.0;
  hyphae.fanout = 2;
  table[StageClass::Hyphae] = hyphae;

  StageParams mycelium;
  mycelium.n_structures = 6;
  mycelium.branch_depth = 4;
  mycelium.branch_length = 16.0;
  mycelium.branch_width = 4.0;
  mycelium.fanout = 3;
  table[StageClass::Mycelium] = mycelium;
  return table;
}

StructureGraph generate_stage(StageClass stage, const StageParamsTable& params_by_stage,
                              Rng& rng, Canvas canvas) {
  const auto it = params_by_stage.find(stage);
  if (it == params_by_stage.end())
    throw ConfigError(std::string("missing stage params for ") + stage_name(stage));
  const StageParams& params = it->second;

  if (stage == StageClass::Spore) return generate_spore(params, rng, canvas);

  const StageClass previous = stage_from_ordinal(ordinal(stage) - 1);
  const auto prev_it = params_by_stage.find(previous);
  if (prev_it == params_by_stage.end())
    throw ConfigError(std::string("missing stage params for previous stage ") +
                      stage_name(previous));

  StructureGraph graph = generate_branching(params, stage, rng, canvas);

  const int overlay_count =
      static_cast<int>(std::ceil(params.overlap_fraction * params.n_structures));
  if (overlay_count > 0) {
    StageParams overlay = prev_it->second;
    overlay.n_structures = overlay_count;
    StructureGraph extra = previous == StageClass::Spore
                               ? generate_spore(overlay, rng, canvas)
                               : generate_branching(overlay, previous, rng, canvas);
    graph.circles.insert(graph.circles.end(), extra.circles.begin(), extra.circles.end());
    graph.segments.insert(graph.segments.end(), extra.segments.begin(), extra.segments.end());
    graph.warnings.insert(graph.warnings.end(), extra.warnings.begin(), extra.warnings.end());
  }
  return graph;
}

}  // namespace fungi
