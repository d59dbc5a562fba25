#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fungi/morphology.hpp"
#include "fungi/rng.hpp"
#include "fungi/types.hpp"

namespace fungi {

using Rgb = std::array<std::uint8_t, 3>;

// Two-point linear gradient over t in [0, 1]; both endpoints are exact.
struct ColorGradient {
  Rgb start{255, 255, 0};
  Rgb end{255, 165, 0};

  Rgb at(double t) const;  // t clamped into [0, 1]
};

// Stage palettes: spore yellow->orange, hyphae orange->deep orange,
// mycelium red-orange->deep red.
ColorGradient default_gradient(StageClass stage);

// 100 s growth timeline. Temperature rises linearly from temp_min_K to
// temp_max_K; half-open bands map temperature back to a stage, with each
// band boundary belonging to the later stage.
struct TimelineSpec {
  double duration_s = 100.0;
  double temp_min_K = 300.0;
  double temp_max_K = 400.0;
  double hyphae_onset_K = 330.0;    // [temp_min, 330) -> spore
  double mycelium_onset_K = 370.0;  // [330, 370) -> hyphae, [370, temp_max] -> mycelium

  void validate() const;
};

double temperature_at(double time_s, const TimelineSpec& spec);
StageClass stage_for_temperature(double temp_K, const TimelineSpec& spec);

// Uniform time point within the stage's temperature band.
double sample_time_in_stage(StageClass stage, const TimelineSpec& spec, Rng& rng);

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB, 3 bytes per pixel
  StageClass stage = StageClass::Spore;
  double time_s = 0.0;
  double temperature_K = 0.0;

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb color);
};

// Hard-edged deterministic rasterization (no anti-aliasing, so renders are
// byte-exact). Circles are filled with gradient(0); a segment at depth d
// strokes gradient(d / max_depth). Circles draw first, then segments in
// stored order; geometry outside the canvas is clipped.
RasterImage render(const StructureGraph& graph, const ColorGradient& gradient,
                   Canvas canvas, Rgb background = {0, 0, 0});

// Binary PPM (P6). Lossless; re-reading reproduces the pixel buffer exactly.
std::string ppm_bytes(const RasterImage& image);
void write_ppm(const RasterImage& image, const std::string& path);
RasterImage read_ppm(const std::string& path);

}  // namespace fungi
