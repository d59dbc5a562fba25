#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <set>

#include "fungi/error.hpp"
#include "fungi/morphology.hpp"
#include "fungi/rng.hpp"

using namespace fungi;

namespace {

// Literal recursion oracle: counts the nodes a fanout-ary tree of the given
// depth emits, one segment per node, without touching the generator.
long count_segments_oracle(int n_structures, int depth, int fanout) {
  std::function<long(int)> subtree = [&](int d) -> long {
    if (d > depth) return 0;
    long total = 0;
    for (int c = 0; c < fanout; ++c) total += 1 + subtree(d + 1);
    return total;
  };
  return static_cast<long>(n_structures) * subtree(1);
}

StageParams branching_params(int n, int depth, int fanout, double length = 12.0,
                             double width = 3.0) {
  StageParams p;
  p.n_structures = n;
  p.branch_depth = depth;
  p.branch_length = length;
  p.branch_width = width;
  p.fanout = fanout;
  return p;
}

}  // namespace

TEST_CASE("spore graph has exactly n_structures circles and no segments") {
  StageParams params;
  params.n_structures = 1;
  Rng rng(7);
  const auto graph = generate_spore(params, rng, Canvas{64, 64});
  CHECK(graph.circles.size() == 1);
  CHECK(graph.segments.empty());

  params.n_structures = 20;
  Rng rng2(3);
  const auto graph2 = generate_spore(params, rng2, Canvas{64, 64});
  CHECK(graph2.circles.size() == 20);
  CHECK(graph2.segments.empty());
}

TEST_CASE("spore centers match an independent re-draw and stay inside the inset canvas") {
  StageParams params;
  params.n_structures = 50;
  const Canvas canvas{64, 64};
  Rng rng(11);
  const auto graph = generate_spore(params, rng, canvas);

  // Re-draw with the documented order: x then y per structure.
  Rng oracle(11);
  for (const auto& c : graph.circles) {
    const double x = oracle.uniform(params.spore_radius, canvas.width - params.spore_radius);
    const double y = oracle.uniform(params.spore_radius, canvas.height - params.spore_radius);
    CHECK(c.x == x);
    CHECK(c.y == y);
    CHECK(c.x >= params.spore_radius);
    CHECK(c.x < canvas.width - params.spore_radius);
    CHECK(c.y >= params.spore_radius);
    CHECK(c.y < canvas.height - params.spore_radius);
  }
}

TEST_CASE("canvas smaller than four spore radii is rejected") {
  StageParams params;
  params.spore_radius = 3.0;
  Rng rng(1);
  CHECK_THROWS_AS(generate_spore(params, rng, Canvas{11, 64}), DimensionError);
  CHECK_THROWS_AS(generate_spore(params, rng, Canvas{64, 11}), DimensionError);
}

TEST_CASE("branching counts follow the recursion oracle") {
  {
    Rng rng(5);
    const auto graph =
        generate_branching(branching_params(2, 2, 2), StageClass::Hyphae, rng, Canvas{128, 128});
    CHECK(graph.segments.size() == 12);  // 2 * (2 + 4)
    CHECK(graph.circles.size() == 2);
  }
  for (int n = 1; n <= 4; ++n) {
    for (int depth = 1; depth <= 3; ++depth) {
      for (int fanout = 1; fanout <= 3; ++fanout) {
        Rng rng(derive_seed(99, static_cast<std::uint64_t>(n * 100 + depth * 10 + fanout)));
        const auto graph = generate_branching(branching_params(n, depth, fanout),
                                              StageClass::Mycelium, rng, Canvas{128, 128});
        CHECK(static_cast<long>(graph.segments.size()) ==
              count_segments_oracle(n, depth, fanout));
      }
    }
  }
}

TEST_CASE("segment lengths and widths decay geometrically with depth") {
  StageParams params = branching_params(3, 3, 2, 10.0, 4.0);
  params.length_decay = 0.5;
  params.width_decay = 0.75;
  Rng rng(21);
  const auto graph = generate_branching(params, StageClass::Hyphae, rng, Canvas{256, 256});
  for (const auto& s : graph.segments) {
    const double length = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
    const double expect_length = params.branch_length * std::pow(params.length_decay, s.depth);
    const double expect_width = params.branch_width * std::pow(params.width_decay, s.depth);
    CHECK(length == doctest::Approx(expect_length).epsilon(1e-6));
    CHECK(s.width == doctest::Approx(expect_width).epsilon(1e-6));
    CHECK(s.depth >= 1);
    CHECK(s.depth <= params.branch_depth);
  }
  // Depth-2 spot check: 10 * 0.5^2 = 2.5 px.
  bool saw_depth2 = false;
  for (const auto& s : graph.segments) {
    if (s.depth == 2) {
      CHECK(std::hypot(s.x1 - s.x0, s.y1 - s.y0) == doctest::Approx(2.5).epsilon(1e-9));
      saw_depth2 = true;
    }
  }
  CHECK(saw_depth2);
}

TEST_CASE("single-level tree emits fanout segments of the decayed width") {
  StageParams params = branching_params(1, 1, 3, 12.0, 4.0);
  params.width_decay = 0.75;
  Rng rng(2);
  const auto graph = generate_branching(params, StageClass::Hyphae, rng, Canvas{128, 128});
  REQUIRE(graph.segments.size() == 3);
  for (const auto& s : graph.segments) {
    CHECK(s.width == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.depth == 1);
  }
}

TEST_CASE("branching requires depth >= 1 and warns on sub-pixel tips") {
  StageParams params = branching_params(1, 0, 2);
  params.branch_depth = 0;
  Rng rng(1);
  CHECK_THROWS_AS(generate_branching(params, StageClass::Hyphae, rng, Canvas{64, 64}),
                  ConfigError);

  StageParams tiny = branching_params(1, 4, 2, 1.0, 2.0);
  tiny.length_decay = 0.5;  // tip length 1 * 0.5^4 = 0.0625 px
  Rng rng2(1);
  const auto graph = generate_branching(tiny, StageClass::Mycelium, rng2, Canvas{64, 64});
  REQUIRE(graph.warnings.size() == 1);
  CHECK(graph.warnings[0].find("degenerate") != std::string::npos);
}

TEST_CASE("stage overlay mixes in previous-stage structures") {
  auto table = default_stage_params();

  SUBCASE("spore stage never carries an overlay") {
    table[StageClass::Spore].overlap_fraction = 0.15;
    Rng rng(4);
    const auto graph = generate_stage(StageClass::Spore, table, rng, Canvas{64, 64});
    CHECK(graph.circles.size() == 30);
    CHECK(graph.segments.empty());
  }

  SUBCASE("hyphae at overlap 0.2 gains ceil(0.2*10) = 2 plain spores") {
    table[StageClass::Hyphae].n_structures = 10;
    table[StageClass::Hyphae].overlap_fraction = 0.2;
    Rng rng(4);
    const auto graph = generate_stage(StageClass::Hyphae, table, rng, Canvas{64, 64});
    CHECK(graph.circles.size() == 12);  // 10 roots + 2 overlay spores
    CHECK(static_cast<long>(graph.segments.size()) == count_segments_oracle(10, 2, 2));
  }

  SUBCASE("zero overlap adds nothing") {
    table[StageClass::Mycelium].n_structures = 8;
    table[StageClass::Mycelium].overlap_fraction = 0.0;
    Rng rng(4);
    const auto graph = generate_stage(StageClass::Mycelium, table, rng, Canvas{64, 64});
    CHECK(graph.circles.size() == 8);
    CHECK(static_cast<long>(graph.segments.size()) == count_segments_oracle(8, 4, 3));
  }

  SUBCASE("missing previous-stage params is a configuration error") {
    table.erase(StageClass::Spore);
    Rng rng(4);
    CHECK_THROWS_AS(generate_stage(StageClass::Hyphae, table, rng, Canvas{64, 64}), ConfigError);
  }
}

TEST_CASE("identical stage, params, seed and canvas give byte-identical graphs") {
  const auto table = default_stage_params();
  for (int k = 0; k < kNumStages; ++k) {
    const auto stage = static_cast<StageClass>(k);
    Rng a(1234);
    Rng b(1234);
    const auto ga = generate_stage(stage, table, a, Canvas{64, 64});
    const auto gb = generate_stage(stage, table, b, Canvas{64, 64});
    CHECK(ga.serialize() == gb.serialize());
  }
  Rng a(1234);
  Rng c(1235);
  CHECK(generate_stage(StageClass::Hyphae, table, a, Canvas{64, 64}).serialize() !=
        generate_stage(StageClass::Hyphae, table, c, Canvas{64, 64}).serialize());
}

TEST_CASE("default parameter table gives strictly increasing complexity") {
  const auto table = default_stage_params();
  double mean_segments[kNumStages] = {0, 0, 0};
  const int trials = 10;
  for (int k = 0; k < kNumStages; ++k) {
    for (int t = 0; t < trials; ++t) {
      Rng rng(derive_seed(777, static_cast<std::uint64_t>(k * trials + t)));
      const auto graph = generate_stage(static_cast<StageClass>(k), table, rng, Canvas{64, 64});
      mean_segments[k] += static_cast<double>(graph.segments.size()) / trials;
    }
  }
  CHECK(mean_segments[0] < mean_segments[1]);
  CHECK(mean_segments[1] < mean_segments[2]);
  CHECK(mean_segments[0] == 0.0);  // spore graphs have no branch term
}
