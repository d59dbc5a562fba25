#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "fungi/error.hpp"
#include "fungi/raster.hpp"
#include "fungi/rng.hpp"
#include "fungi/util.hpp"

using namespace fungi;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("temperature is linear over the 100 s timeline") {
  const TimelineSpec spec;
  CHECK(temperature_at(0.0, spec) == 300.0);
  CHECK(temperature_at(100.0, spec) == 400.0);
  CHECK(temperature_at(50.0, spec) == 350.0);

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0.0, 100.0);
    const double b = rng.uniform(0.0, 100.0);
    CHECK(temperature_at(a, spec) + temperature_at(b, spec) ==
          doctest::Approx(2.0 * temperature_at((a + b) / 2.0, spec)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(temperature_at(-0.001, spec), RangeError);
  CHECK_THROWS_AS(temperature_at(100.001, spec), RangeError);
}

TEST_CASE("temperature bands map to stages with later-stage boundaries") {
  const TimelineSpec spec;
  CHECK(stage_for_temperature(315.0, spec) == StageClass::Spore);
  CHECK(stage_for_temperature(350.0, spec) == StageClass::Hyphae);
  CHECK(stage_for_temperature(330.0, spec) == StageClass::Hyphae);  // boundary goes forward
  CHECK(stage_for_temperature(370.0, spec) == StageClass::Mycelium);
  CHECK(stage_for_temperature(300.0, spec) == StageClass::Spore);
  CHECK(stage_for_temperature(400.0, spec) == StageClass::Mycelium);
  CHECK_THROWS_AS(stage_for_temperature(299.9, spec), RangeError);
  CHECK_THROWS_AS(stage_for_temperature(400.1, spec), RangeError);
}

TEST_CASE("stage never regresses as time advances") {
  const TimelineSpec spec;
  int last = 0;
  for (int step = 0; step <= 1000; ++step) {
    const double t = 100.0 * step / 1000.0;
    const int stage = ordinal(stage_for_temperature(temperature_at(t, spec), spec));
    CHECK(stage >= last);
    last = stage;
  }
  Rng rng(9);
  for (int k = 0; k < kNumStages; ++k) {
    const auto stage = static_cast<StageClass>(k);
    for (int i = 0; i < 50; ++i) {
      const double t = sample_time_in_stage(stage, spec, rng);
      CHECK(stage_for_temperature(temperature_at(t, spec), spec) == stage);
    }
  }
}

TEST_CASE("empty graph renders as pure background") {
  StructureGraph graph;
  const Rgb bg{10, 20, 30};
  const auto image = render(graph, default_gradient(StageClass::Spore), Canvas{16, 16}, bg);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) CHECK(image.at(x, y) == bg);
}

TEST_CASE("single circle fills with the gradient start color") {
  StructureGraph graph;
  graph.circles.push_back(Circle{8.0, 8.0, 3.0});
  const ColorGradient gradient{{255, 255, 0}, {255, 165, 0}};
  const auto image = render(graph, gradient, Canvas{16, 16}, Rgb{0, 0, 0});
  CHECK(image.at(8, 8) == Rgb{255, 255, 0});
  int painted = 0;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const double dx = x + 0.5 - 8.0;
      const double dy = y + 0.5 - 8.0;
      const bool inside = dx * dx + dy * dy <= 9.0;
      if (inside) {
        CHECK(image.at(x, y) == Rgb{255, 255, 0});
        ++painted;
      } else {
        CHECK(image.at(x, y) == Rgb{0, 0, 0});  // nothing outside the geometry
      }
    }
  }
  CHECK(painted > 0);
}

TEST_CASE("deepest segments take the exact gradient end color") {
  // Two hand-placed segments, depths 1 and 2, far enough apart not to touch.
  StructureGraph graph;
  graph.stage = StageClass::Hyphae;
  graph.segments.push_back(BranchSegment{4.0, 8.0, 16.0, 8.0, 2.0, 1, 0.0});
  graph.segments.push_back(BranchSegment{4.0, 24.0, 16.0, 24.0, 2.0, 2, 0.0});
  const ColorGradient gradient{{255, 165, 0}, {255, 120, 0}};
  const auto image = render(graph, gradient, Canvas{32, 32}, Rgb{0, 0, 0});
  // Independent evaluation of the gradient formula at t = 1/2 and t = 1.
  const Rgb mid{255, static_cast<std::uint8_t>(std::lround(165 + 0.5 * (120 - 165))), 0};
  CHECK(image.at(10, 8) == mid);
  CHECK(image.at(10, 24) == gradient.end);
  CHECK(gradient.at(1.0) == gradient.end);
  CHECK(gradient.at(0.0) == gradient.start);
}

TEST_CASE("zero-size canvas is rejected") {
  StructureGraph graph;
  CHECK_THROWS_AS(render(graph, default_gradient(StageClass::Spore), Canvas{0, 16}, Rgb{0, 0, 0}),
                  DimensionError);
}

TEST_CASE("PPM round-trip preserves the pixel buffer exactly") {
  RasterImage image;
  image.width = 2;
  image.height = 2;
  image.pixels = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const auto path = temp_path("fungi_roundtrip.ppm");
  write_ppm(image, path);
  const auto back = read_ppm(path);
  CHECK(back.width == 2);
  CHECK(back.height == 2);
  CHECK(back.pixels == image.pixels);
  std::filesystem::remove(path);
}

TEST_CASE("re-rendering the same seed produces identical file bytes") {
  const auto table = default_stage_params();
  const auto render_once = [&](std::uint64_t seed) {
    Rng rng(seed);
    const auto graph = generate_stage(StageClass::Mycelium, table, rng, Canvas{64, 64});
    return ppm_bytes(render(graph, default_gradient(StageClass::Mycelium), Canvas{64, 64}));
  };
  CHECK(render_once(42) == render_once(42));
  CHECK(render_once(42) != render_once(43));
}
