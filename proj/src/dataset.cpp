#include "fungi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "fungi/error.hpp"
#include "fungi/json_util.hpp"
#include "fungi/parallel.hpp"
#include "fungi/util.hpp"

namespace fs = std::filesystem;

namespace fungi {

namespace {

using nlohmann::json;

json gradient_to_json(const ColorGradient& g) {
  return json::array({json::array({g.start[0], g.start[1], g.start[2]}),
                      json::array({g.end[0], g.end[1], g.end[2]})});
}

Rgb rgb_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("config field '" + path + "' must be [r,g,b]");
  Rgb out{};
  for (int i = 0; i < 3; ++i) {
    const int v = j[static_cast<std::size_t>(i)].get<int>();
    if (v < 0 || v > 255) throw ConfigError("config field '" + path + "' channel out of [0,255]");
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
  }
  return out;
}

json stage_params_to_json(const StageParams& p) {
  return json{{"n_structures", p.n_structures}, {"branch_depth", p.branch_depth},
              {"branch_length", p.branch_length}, {"branch_width", p.branch_width},
              {"length_decay", p.length_decay}, {"width_decay", p.width_decay},
              {"spore_radius", p.spore_radius}, {"fanout", p.fanout},
              {"overlap_fraction", p.overlap_fraction}, {"angle_jitter", p.angle_jitter}};
}

StageParams stage_params_from_json(const json& j, const StageParams& base, const std::string& path) {
  jsonu::check_keys(j, path,
                    {"n_structures", "branch_depth", "branch_length", "branch_width",
                     "length_decay", "width_decay", "spore_radius", "fanout",
                     "overlap_fraction", "angle_jitter"});
  StageParams p = base;
  p.n_structures = jsonu::get_or(j, "n_structures", base.n_structures, path);
  p.branch_depth = jsonu::get_or(j, "branch_depth", base.branch_depth, path);
  p.branch_length = jsonu::get_or(j, "branch_length", base.branch_length, path);
  p.branch_width = jsonu::get_or(j, "branch_width", base.branch_width, path);
  p.length_decay = jsonu::get_or(j, "length_decay", base.length_decay, path);
  p.width_decay = jsonu::get_or(j, "width_decay", base.width_decay, path);
  p.spore_radius = jsonu::get_or(j, "spore_radius", base.spore_radius, path);
  p.fanout = jsonu::get_or(j, "fanout", base.fanout, path);
  p.overlap_fraction = jsonu::get_or(j, "overlap_fraction", base.overlap_fraction, path);
  p.angle_jitter = jsonu::get_or(j, "angle_jitter", base.angle_jitter, path);
  return p;
}

std::string image_rel_path(const DatasetConfig& config, Split split, StageClass stage, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return std::string(split_name(split)) + "/" + stage_name(stage) + "/" + buf + "." +
         config.image_ext;
}

// Largest-remainder apportionment of n records over the three splits.
std::array<int, kNumSplits> split_sizes(int n, const SplitFractions& fractions) {
  const std::array<double, kNumSplits> f{fractions.train, fractions.val, fractions.test};
  std::array<int, kNumSplits> sizes{};
  std::array<double, kNumSplits> remainders{};
  int assigned = 0;
  for (int s = 0; s < kNumSplits; ++s) {
    const double exact = f[static_cast<std::size_t>(s)] * n;
    sizes[static_cast<std::size_t>(s)] = static_cast<int>(std::floor(exact));
    remainders[static_cast<std::size_t>(s)] = exact - sizes[static_cast<std::size_t>(s)];
    assigned += sizes[static_cast<std::size_t>(s)];
  }
  std::array<int, kNumSplits> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainders[static_cast<std::size_t>(a)] > remainders[static_cast<std::size_t>(b)];
  });
  for (int extra = 0; extra < n - assigned; ++extra) {
    ++sizes[static_cast<std::size_t>(order[static_cast<std::size_t>(extra % kNumSplits)])];
  }
  return sizes;
}

json record_to_json(const ImageRecord& r) {
  return json{{"kind", "image"},
              {"path", r.path},
              {"class", stage_name(r.stage)},
              {"split", split_name(r.split)},
              {"index", r.class_index},
              {"seed", r.seed},
              {"time_s", r.time_s},
              {"temperature_K", r.temperature_K},
              {"checksum", r.checksum},
              {"caption_ids", r.caption_ids}};
}

ImageRecord record_from_json(const json& j) {
  ImageRecord r;
  r.path = j.at("path").get<std::string>();
  r.stage = stage_from_name(j.at("class").get<std::string>());
  r.split = split_from_name(j.at("split").get<std::string>());
  r.class_index = j.at("index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.time_s = j.at("time_s").get<double>();
  r.temperature_K = j.at("temperature_K").get<double>();
  r.checksum = j.at("checksum").get<std::string>();
  r.caption_ids = j.at("caption_ids").get<std::vector<int>>();
  return r;
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw Error("invalid split");
}

Split split_from_name(const std::string& name) {
  for (int s = 0; s < kNumSplits; ++s) {
    if (name == split_name(static_cast<Split>(s))) return static_cast<Split>(s);
  }
  throw ConfigError("unknown split name: " + name);
}

void SplitFractions::validate() const {
  if (train <= 0 || val <= 0 || test <= 0)
    throw ConfigError("split fractions must all be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
}

void DatasetConfig::validate() const {
  if (per_class_count <= 0) throw ConfigError("per_class_count must be positive");
  if (canvas.width <= 0 || canvas.height <= 0) throw ConfigError("canvas must be non-empty");
  splits.validate();
  timeline.validate();
  for (int k = 0; k < kNumStages; ++k) {
    const auto stage = static_cast<StageClass>(k);
    const auto it = stage_params.find(stage);
    if (it == stage_params.end())
      throw ConfigError(std::string("missing stage params for ") + stage_name(stage));
    it->second.validate(stage);
  }
  const auto sizes = split_sizes(per_class_count, splits);
  for (int s = 0; s < kNumSplits; ++s) {
    if (sizes[static_cast<std::size_t>(s)] == 0)
      throw ConfigError(std::string("per_class_count too small: empty ") +
                        split_name(static_cast<Split>(s)) + " split");
  }
  prompt.validate();
  captions.validate();
  if (captions.total < 1) throw ConfigError("dataset captions.total must be >= 1");
  if (out_dir.empty()) throw ConfigError("dataset out_dir must be set");
  if (image_ext != "ppm") throw ConfigError("unsupported image_ext: " + image_ext);
}

nlohmann::json dataset_config_to_json(const DatasetConfig& c) {
  json stage_params = json::object();
  json gradients = json::object();
  json pools = json::object();
  for (int k = 0; k < kNumStages; ++k) {
    const auto stage = static_cast<StageClass>(k);
    stage_params[stage_name(stage)] = stage_params_to_json(c.stage_params.at(stage));
    gradients[stage_name(stage)] = gradient_to_json(c.gradients[static_cast<std::size_t>(k)]);
    pools[stage_name(stage)] = c.prompt.pools[static_cast<std::size_t>(k)];
  }
  return json{
      {"per_class_count", c.per_class_count},
      {"canvas", c.canvas.width},
      {"master_seed", c.master_seed},
      {"splits", json{{"train", c.splits.train}, {"val", c.splits.val}, {"test", c.splits.test}}},
      {"stage_params", stage_params},
      {"timeline",
       json{{"duration_s", c.timeline.duration_s},
            {"temp_min_K", c.timeline.temp_min_K},
            {"temp_max_K", c.timeline.temp_max_K},
            {"hyphae_onset_K", c.timeline.hyphae_onset_K},
            {"mycelium_onset_K", c.timeline.mycelium_onset_K}}},
      {"gradients", gradients},
      {"background", json::array({c.background[0], c.background[1], c.background[2]})},
      {"captions",
       json{{"min_tokens", c.captions.min_tokens},
            {"max_tokens", c.captions.max_tokens},
            {"batch_size", c.captions.batch_size},
            {"total", c.captions.total},
            {"sampling_temperature", c.captions.sampling_temperature},
            {"frame", c.prompt.frame},
            {"pools", pools}}},
      {"image_ext", c.image_ext},
  };
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig c;
  const std::string path = "dataset";
  jsonu::check_keys(j, path,
                    {"per_class_count", "canvas", "master_seed", "splits", "stage_params",
                     "timeline", "gradients", "background", "captions", "image_ext"});
  c.per_class_count = jsonu::get_or(j, "per_class_count", c.per_class_count, path);
  const int canvas = jsonu::get_or(j, "canvas", c.canvas.width, path);
  c.canvas = Canvas{canvas, canvas};
  c.master_seed = jsonu::get_or(j, "master_seed", c.master_seed, path);
  if (j.contains("splits")) {
    const auto& s = j.at("splits");
    jsonu::check_keys(s, path + ".splits", {"train", "val", "test"});
    c.splits.train = jsonu::get_or(s, "train", c.splits.train, path + ".splits");
    c.splits.val = jsonu::get_or(s, "val", c.splits.val, path + ".splits");
    c.splits.test = jsonu::get_or(s, "test", c.splits.test, path + ".splits");
  }
  if (j.contains("stage_params")) {
    const auto& sp = j.at("stage_params");
    jsonu::check_keys(sp, path + ".stage_params", {"spore", "hyphae", "mycelium"});
    for (int k = 0; k < kNumStages; ++k) {
      const auto stage = static_cast<StageClass>(k);
      if (sp.contains(stage_name(stage))) {
        c.stage_params[stage] =
            stage_params_from_json(sp.at(stage_name(stage)), c.stage_params.at(stage),
                                   path + ".stage_params." + stage_name(stage));
      }
    }
  }
  if (j.contains("timeline")) {
    const auto& t = j.at("timeline");
    jsonu::check_keys(t, path + ".timeline",
                      {"duration_s", "temp_min_K", "temp_max_K", "hyphae_onset_K",
                       "mycelium_onset_K"});
    c.timeline.duration_s = jsonu::get_or(t, "duration_s", c.timeline.duration_s, path);
    c.timeline.temp_min_K = jsonu::get_or(t, "temp_min_K", c.timeline.temp_min_K, path);
    c.timeline.temp_max_K = jsonu::get_or(t, "temp_max_K", c.timeline.temp_max_K, path);
    c.timeline.hyphae_onset_K = jsonu::get_or(t, "hyphae_onset_K", c.timeline.hyphae_onset_K, path);
    c.timeline.mycelium_onset_K =
        jsonu::get_or(t, "mycelium_onset_K", c.timeline.mycelium_onset_K, path);
  }
  if (j.contains("gradients")) {
    const auto& g = j.at("gradients");
    jsonu::check_keys(g, path + ".gradients", {"spore", "hyphae", "mycelium"});
    for (int k = 0; k < kNumStages; ++k) {
      const auto stage = static_cast<StageClass>(k);
      if (g.contains(stage_name(stage))) {
        const auto& pair = g.at(stage_name(stage));
        const std::string gpath = path + ".gradients." + stage_name(stage);
        if (!pair.is_array() || pair.size() != 2)
          throw ConfigError("config field '" + gpath + "' must be [[r,g,b],[r,g,b]]");
        c.gradients[static_cast<std::size_t>(k)] =
            ColorGradient{rgb_from_json(pair[0], gpath), rgb_from_json(pair[1], gpath)};
      }
    }
  }
  if (j.contains("background")) c.background = rgb_from_json(j.at("background"), path + ".background");
  if (j.contains("captions")) {
    const auto& cc = j.at("captions");
    jsonu::check_keys(cc, path + ".captions",
                      {"min_tokens", "max_tokens", "batch_size", "total",
                       "sampling_temperature", "frame", "pools"});
    c.captions.min_tokens = jsonu::get_or(cc, "min_tokens", c.captions.min_tokens, path);
    c.captions.max_tokens = jsonu::get_or(cc, "max_tokens", c.captions.max_tokens, path);
    c.captions.batch_size = jsonu::get_or(cc, "batch_size", c.captions.batch_size, path);
    c.captions.total = jsonu::get_or(cc, "total", c.captions.total, path);
    c.captions.sampling_temperature =
        jsonu::get_or(cc, "sampling_temperature", c.captions.sampling_temperature, path);
    c.prompt.frame = jsonu::get_or(cc, "frame", c.prompt.frame, path);
    if (cc.contains("pools")) {
      const auto& pools = cc.at("pools");
      jsonu::check_keys(pools, path + ".captions.pools", {"spore", "hyphae", "mycelium"});
      for (int k = 0; k < kNumStages; ++k) {
        const auto stage = static_cast<StageClass>(k);
        if (pools.contains(stage_name(stage))) {
          c.prompt.pools[static_cast<std::size_t>(k)] =
              pools.at(stage_name(stage)).get<std::vector<std::string>>();
        }
      }
    }
  }
  c.image_ext = jsonu::get_or(j, "image_ext", c.image_ext, path);
  return c;
}

void DatasetManifest::save(const std::string& path) const {
  std::string out;
  out += json{{"kind", "config"}, {"dataset", config_snapshot}}.dump();
  out += '\n';
  for (int k = 0; k < kNumStages; ++k) {
    const auto& entry = captions[static_cast<std::size_t>(k)];
    out += json{{"kind", "captions"},
                {"class", stage_name(static_cast<StageClass>(k))},
                {"path", entry.path},
                {"count", entry.count},
                {"checksum", entry.checksum},
                {"provider", entry.provider}}
               .dump();
    out += '\n';
  }
  for (const auto& record : records) {
    out += record_to_json(record).dump();
    out += '\n';
  }
  write_file(path, out);
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  DatasetManifest manifest;
  std::istringstream in(read_file(path));
  std::string line;
  bool saw_config = false;
  std::array<bool, kNumStages> saw_captions{};
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError("manifest " + path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "config") {
      manifest.config_snapshot = j.at("dataset");
      saw_config = true;
    } else if (kind == "captions") {
      const auto stage = stage_from_name(j.at("class").get<std::string>());
      CaptionTableEntry entry;
      entry.path = j.at("path").get<std::string>();
      entry.count = j.at("count").get<int>();
      entry.checksum = j.at("checksum").get<std::string>();
      entry.provider = j.at("provider").get<std::string>();
      manifest.captions[static_cast<std::size_t>(ordinal(stage))] = entry;
      saw_captions[static_cast<std::size_t>(ordinal(stage))] = true;
    } else if (kind == "image") {
      manifest.records.push_back(record_from_json(j));
    } else {
      throw IoError("manifest " + path + " line " + std::to_string(line_no) +
                    ": unknown record kind '" + kind + "'");
    }
  }
  if (!saw_config) throw IoError("manifest " + path + " has no config record");
  for (int k = 0; k < kNumStages; ++k) {
    if (!saw_captions[static_cast<std::size_t>(k)])
      throw IoError("manifest " + path + " has no captions record for " +
                    stage_name(static_cast<StageClass>(k)));
  }
  return manifest;
}

std::array<std::array<int, kNumSplits>, kNumStages> DatasetManifest::split_counts() const {
  std::array<std::array<int, kNumSplits>, kNumStages> counts{};
  for (const auto& r : records) {
    ++counts[static_cast<std::size_t>(ordinal(r.stage))][static_cast<std::size_t>(r.split)];
  }
  return counts;
}

DatasetManifest build_dataset(const DatasetConfig& config) {
  config.validate();
  const fs::path root(config.out_dir);
  std::error_code ec;
  fs::create_directories(root / "captions", ec);
  if (ec) throw IoError("cannot create output directory " + root.string() + ": " + ec.message());
  for (int s = 0; s < kNumSplits; ++s) {
    for (int k = 0; k < kNumStages; ++k) {
      fs::create_directories(root / split_name(static_cast<Split>(s)) /
                                 stage_name(static_cast<StageClass>(k)),
                             ec);
      if (ec) throw IoError("cannot create output directory tree: " + ec.message());
    }
  }

  DatasetManifest manifest;
  manifest.config_snapshot = dataset_config_to_json(config);

  std::vector<std::string> written;
  written.reserve(static_cast<std::size_t>(config.per_class_count) * kNumStages + 4);
  auto cleanup = [&]() {
    for (const auto& rel : written) fs::remove(root / rel, ec);
    fs::remove(root / "manifest.jsonl", ec);
  };

  try {
    // Caption sets first; the manifest references them per class.
    for (int k = 0; k < kNumStages; ++k) {
      const auto stage = static_cast<StageClass>(k);
      const CaptionSet set =
          generate_set(stage, config.prompt, config.captions,
                       derive_seed(config.master_seed, 9000 + static_cast<std::uint64_t>(k)));
      const std::string rel = std::string("captions/") + stage_name(stage) + ".txt";
      write_caption_file(set, (root / rel).string());
      written.push_back(rel);
      CaptionTableEntry entry;
      entry.path = rel;
      entry.count = static_cast<int>(set.captions.size());
      entry.checksum = to_hex(checksum_file((root / rel).string()));
      entry.provider = set.provider;
      manifest.captions[static_cast<std::size_t>(k)] = entry;
    }

    // Stratified split assignment: per-class seeded shuffle, then
    // largest-remainder counts in (train, val, test) order.
    const int n = config.per_class_count;
    const auto sizes = split_sizes(n, config.splits);
    std::array<std::vector<Split>, kNumStages> split_of;
    for (int k = 0; k < kNumStages; ++k) {
      std::vector<int> order(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
      Rng shuffle_rng(derive_seed(config.master_seed, 8000 + static_cast<std::uint64_t>(k)));
      for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(shuffle_rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      }
      auto& assignment = split_of[static_cast<std::size_t>(k)];
      assignment.assign(static_cast<std::size_t>(n), Split::Train);
      int cursor = 0;
      for (int s = 0; s < kNumSplits; ++s) {
        for (int c = 0; c < sizes[static_cast<std::size_t>(s)]; ++c, ++cursor) {
          assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(cursor)])] =
              static_cast<Split>(s);
        }
      }
    }

    manifest.records.assign(static_cast<std::size_t>(n) * kNumStages, ImageRecord{});
    parallel_for(manifest.records.size(), config.threads, [&](std::size_t slot) {
      const int k = static_cast<int>(slot) / n;
      const int i = static_cast<int>(slot) % n;
      const auto stage = static_cast<StageClass>(k);
      const Split split = split_of[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      const std::uint64_t seed = derive_seed(config.master_seed, slot);

      // Per-image stream: timeline point first, then the structure graph.
      Rng rng(seed);
      const double time_s = sample_time_in_stage(stage, config.timeline, rng);
      const double temp_K = temperature_at(time_s, config.timeline);
      const StructureGraph graph = generate_stage(stage, config.stage_params, rng, config.canvas);
      RasterImage image = render(graph, config.gradients[static_cast<std::size_t>(k)],
                                 config.canvas, config.background);
      image.time_s = time_s;
      image.temperature_K = temp_K;

      ImageRecord record;
      record.path = image_rel_path(config, split, stage, i);
      record.stage = stage;
      record.split = split;
      record.class_index = i;
      record.seed = seed;
      record.time_s = time_s;
      record.temperature_K = temp_K;
      const std::string bytes = ppm_bytes(image);
      record.checksum = to_hex(fnv1a64(bytes));
      record.caption_ids.resize(
          static_cast<std::size_t>(manifest.captions[static_cast<std::size_t>(k)].count));
      for (std::size_t c = 0; c < record.caption_ids.size(); ++c)
        record.caption_ids[c] = static_cast<int>(c);
      write_file((root / record.path).string(), bytes);
      manifest.records[slot] = std::move(record);
    });
    for (const auto& record : manifest.records) written.push_back(record.path);

    manifest.save(manifest_path(config.out_dir));
  } catch (...) {
    cleanup();
    throw;
  }
  return manifest;
}

DatasetView DatasetView::open(const std::string& manifest_file) {
  DatasetView view;
  view.manifest_ = DatasetManifest::load(manifest_file);
  view.root_ = fs::path(manifest_file).parent_path().string();
  if (view.root_.empty()) view.root_ = ".";

  for (int k = 0; k < kNumStages; ++k) {
    const auto& entry = view.manifest_.captions[static_cast<std::size_t>(k)];
    const std::string full = view.root_ + "/" + entry.path;
    std::uint64_t sum;
    try {
      sum = checksum_file(full);
    } catch (const IoError&) {
      throw IoError("missing caption file " + entry.path);
    }
    if (to_hex(sum) != entry.checksum)
      throw IntegrityError("checksum mismatch for " + entry.path);
    view.captions_[static_cast<std::size_t>(k)] = read_caption_file(full);
    if (static_cast<int>(view.captions_[static_cast<std::size_t>(k)].size()) != entry.count)
      throw IntegrityError("caption count mismatch for " + entry.path);
  }
  for (const auto& record : view.manifest_.records) {
    const std::string full = view.root_ + "/" + record.path;
    std::uint64_t sum;
    try {
      sum = checksum_file(full);
    } catch (const IoError&) {
      throw IoError("missing image file " + record.path);
    }
    if (to_hex(sum) != record.checksum)
      throw IntegrityError("checksum mismatch for " + record.path);
  }
  return view;
}

std::vector<int> DatasetView::split_indices(Split split) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < manifest_.records.size(); ++i) {
    if (manifest_.records[i].split == split) out.push_back(static_cast<int>(i));
  }
  return out;
}

RasterImage DatasetView::load_image(int record_index) const {
  const auto& record = manifest_.records.at(static_cast<std::size_t>(record_index));
  RasterImage image = read_ppm(root_ + "/" + record.path);
  image.stage = record.stage;
  image.time_s = record.time_s;
  image.temperature_K = record.temperature_K;
  return image;
}

const std::vector<std::string>& DatasetView::captions(StageClass stage) const {
  return captions_[static_cast<std::size_t>(ordinal(stage))];
}

std::vector<BatchItem> sample_batch(const DatasetView& view, Split split, int batch_size,
                                    Rng& rng) {
  std::vector<int> indices = view.split_indices(split);
  if (indices.empty()) throw DataError(std::string("split ") + split_name(split) + " is empty");
  if (batch_size > static_cast<int>(indices.size()))
    throw DataError("batch_size " + std::to_string(batch_size) + " exceeds split size " +
                    std::to_string(indices.size()));
  for (std::size_t i = indices.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i + 1));
    std::swap(indices[i], indices[j]);
  }
  std::vector<BatchItem> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) {
    const int record_index = indices[static_cast<std::size_t>(b)];
    const auto stage = view.records()[static_cast<std::size_t>(record_index)].stage;
    const auto count = view.captions(stage).size();
    batch.push_back(BatchItem{record_index, stage,
                              static_cast<int>(rng.uniform_int(count))});
  }
  return batch;
}

std::vector<std::vector<BatchItem>> epoch_batches(const DatasetView& view, Split split,
                                                  int batch_size, Rng& rng) {
  if (batch_size < 1) throw DataError("batch_size must be positive");
  std::vector<int> indices = view.split_indices(split);
  if (indices.empty()) throw DataError(std::string("split ") + split_name(split) + " is empty");
  for (std::size_t i = indices.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i + 1));
    std::swap(indices[i], indices[j]);
  }
  std::vector<std::vector<BatchItem>> epochs;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<BatchItem> batch;
    batch.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) {
      const int record_index = indices[i];
      const auto stage = view.records()[static_cast<std::size_t>(record_index)].stage;
      const auto count = view.captions(stage).size();
      batch.push_back(BatchItem{record_index, stage, static_cast<int>(rng.uniform_int(count))});
    }
    epochs.push_back(std::move(batch));
  }
  return epochs;
}

}  // namespace fungi
