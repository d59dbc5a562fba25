#include "fungi/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fungi/error.hpp"
#include "fungi/util.hpp"

namespace fungi {

namespace {

std::uint8_t lerp_channel(std::uint8_t a, std::uint8_t b, double t) {
  return static_cast<std::uint8_t>(std::lround(a + t * (static_cast<double>(b) - a)));
}

double point_segment_distance(double px, double py, const BranchSegment& s) {
  const double dx = s.x1 - s.x0;
  const double dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((px - s.x0) * dx + (py - s.y0) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double cx = s.x0 + t * dx;
  const double cy = s.y0 + t * dy;
  return std::hypot(px - cx, py - cy);
}

}  // namespace

Rgb ColorGradient::at(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  return Rgb{lerp_channel(start[0], end[0], t), lerp_channel(start[1], end[1], t),
             lerp_channel(start[2], end[2], t)};
}

ColorGradient default_gradient(StageClass stage) {
  switch (stage) {
    case StageClass::Spore: return ColorGradient{{255, 255, 0}, {255, 165, 0}};
    case StageClass::Hyphae: return ColorGradient{{255, 165, 0}, {255, 120, 0}};
    case StageClass::Mycelium: return ColorGradient{{255, 69, 0}, {139, 0, 0}};
  }
  throw Error("invalid stage");
}

void TimelineSpec::validate() const {
  if (duration_s <= 0) throw ConfigError("timeline duration must be positive");
  if (!(temp_min_K < hyphae_onset_K && hyphae_onset_K < mycelium_onset_K &&
        mycelium_onset_K < temp_max_K)) {
    throw ConfigError("timeline bands must satisfy temp_min < hyphae_onset < mycelium_onset < temp_max");
  }
}

double temperature_at(double time_s, const TimelineSpec& spec) {
  if (!(time_s >= 0.0 && time_s <= spec.duration_s)) {
    throw RangeError("time " + std::to_string(time_s) + " s outside [0, " +
                     std::to_string(spec.duration_s) + "]");
  }
  return spec.temp_min_K + time_s * (spec.temp_max_K - spec.temp_min_K) / spec.duration_s;
}

StageClass stage_for_temperature(double temp_K, const TimelineSpec& spec) {
  if (!(temp_K >= spec.temp_min_K && temp_K <= spec.temp_max_K)) {
    throw RangeError("temperature " + std::to_string(temp_K) + " K outside [" +
                     std::to_string(spec.temp_min_K) + ", " + std::to_string(spec.temp_max_K) + "]");
  }
  if (temp_K < spec.hyphae_onset_K) return StageClass::Spore;
  if (temp_K < spec.mycelium_onset_K) return StageClass::Hyphae;
  return StageClass::Mycelium;
}

double sample_time_in_stage(StageClass stage, const TimelineSpec& spec, Rng& rng) {
  const double rate = (spec.temp_max_K - spec.temp_min_K) / spec.duration_s;
  auto time_of = [&](double temp) { return (temp - spec.temp_min_K) / rate; };
  double lo = 0.0, hi = spec.duration_s;
  switch (stage) {
    case StageClass::Spore: hi = time_of(spec.hyphae_onset_K); break;
    case StageClass::Hyphae: lo = time_of(spec.hyphae_onset_K); hi = time_of(spec.mycelium_onset_K); break;
    case StageClass::Mycelium: lo = time_of(spec.mycelium_onset_K); break;
  }
  return rng.uniform(lo, hi);
}

Rgb RasterImage::at(int x, int y) const {
  const auto i = 3 * (static_cast<std::size_t>(y) * width + x);
  return Rgb{pixels[i], pixels[i + 1], pixels[i + 2]};
}

void RasterImage::set(int x, int y, Rgb color) {
  const auto i = 3 * (static_cast<std::size_t>(y) * width + x);
  pixels[i] = color[0];
  pixels[i + 1] = color[1];
  pixels[i + 2] = color[2];
}

RasterImage render(const StructureGraph& graph, const ColorGradient& gradient,
                   Canvas canvas, Rgb background) {
  if (canvas.width <= 0 || canvas.height <= 0)
    throw DimensionError("render canvas must be non-empty");

  RasterImage image;
  image.width = canvas.width;
  image.height = canvas.height;
  image.stage = graph.stage;
  image.pixels.assign(3u * canvas.width * canvas.height, 0);
  for (int y = 0; y < canvas.height; ++y)
    for (int x = 0; x < canvas.width; ++x) image.set(x, y, background);

  const Rgb circle_color = gradient.at(0.0);
  for (const auto& c : graph.circles) {
    const int x_lo = std::max(0, static_cast<int>(std::floor(c.x - c.radius - 1)));
    const int x_hi = std::min(canvas.width - 1, static_cast<int>(std::ceil(c.x + c.radius + 1)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(c.y - c.radius - 1)));
    const int y_hi = std::min(canvas.height - 1, static_cast<int>(std::ceil(c.y + c.radius + 1)));
    const double r2 = c.radius * c.radius;
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const double dx = x + 0.5 - c.x;
        const double dy = y + 0.5 - c.y;
        if (dx * dx + dy * dy <= r2) image.set(x, y, circle_color);
      }
    }
  }

  const int max_depth = std::max(1, graph.max_segment_depth());
  for (const auto& s : graph.segments) {
    const Rgb color = gradient.at(static_cast<double>(s.depth) / max_depth);
    const double half = s.width / 2.0;
    const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(s.x0, s.x1) - half - 1)));
    const int x_hi =
        std::min(canvas.width - 1, static_cast<int>(std::ceil(std::max(s.x0, s.x1) + half + 1)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(s.y0, s.y1) - half - 1)));
    const int y_hi =
        std::min(canvas.height - 1, static_cast<int>(std::ceil(std::max(s.y0, s.y1) + half + 1)));
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        if (point_segment_distance(x + 0.5, y + 0.5, s) <= half) image.set(x, y, color);
      }
    }
  }
  return image;
}

std::string ppm_bytes(const RasterImage& image) {
  char header[64];
  std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", image.width, image.height);
  std::string out(header);
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

void write_ppm(const RasterImage& image, const std::string& path) {
  write_file(path, ppm_bytes(image));
}

RasterImage read_ppm(const std::string& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {  // comment to end of line
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw IoError("truncated PPM header: " + path);
    return bytes.substr(start, pos - start);
  };

  if (next_token() != "P6") throw IoError("not a binary PPM file: " + path);
  RasterImage image;
  image.width = std::stoi(next_token());
  image.height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (image.width <= 0 || image.height <= 0 || maxval != 255)
    throw IoError("unsupported PPM geometry in " + path);
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = 3u * image.width * image.height;
  if (bytes.size() - pos < need) throw IoError("truncated PPM pixel data: " + path);
  image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return image;
}

}  // namespace fungi
