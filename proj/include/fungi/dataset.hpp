#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fungi/captions.hpp"
#include "fungi/morphology.hpp"
#include "fungi/raster.hpp"
#include "fungi/rng.hpp"
#include "fungi/types.hpp"

namespace fungi {

enum class Split : int { Train = 0, Val = 1, Test = 2 };
inline constexpr int kNumSplits = 3;

const char* split_name(Split split);
Split split_from_name(const std::string& name);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  void validate() const;  // positive, sum to 1 within 1e-9
};

struct DatasetConfig {
  int per_class_count = 300;
  Canvas canvas{64, 64};
  std::uint64_t master_seed = 1;
  SplitFractions splits;
  StageParamsTable stage_params = default_stage_params();
  TimelineSpec timeline;
  std::array<ColorGradient, kNumStages> gradients{
      default_gradient(StageClass::Spore),
      default_gradient(StageClass::Hyphae),
      default_gradient(StageClass::Mycelium),
  };
  Rgb background{0, 0, 0};
  PromptTemplate prompt = default_prompt_template();
  CaptionConstraints captions;
  std::string out_dir;
  std::string image_ext = "ppm";
  int threads = 1;

  void validate() const;
};

nlohmann::json dataset_config_to_json(const DatasetConfig& config);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

struct ImageRecord {
  std::string path;  // relative to the manifest directory
  StageClass stage = StageClass::Spore;
  Split split = Split::Train;
  int class_index = 0;  // per-class id; also the file index
  std::uint64_t seed = 0;
  double time_s = 0.0;
  double temperature_K = 0.0;
  std::string checksum;  // fnv1a64 hex of the image file
  std::vector<int> caption_ids;
};

struct CaptionTableEntry {
  std::string path;  // relative to the manifest directory
  int count = 0;
  std::string checksum;
  std::string provider;
};

// Line-delimited JSON: one config line, one captions line per class, then
// one line per image record sorted by (class, index). No timestamps, so
// rebuilds with the same seed are byte-identical.
struct DatasetManifest {
  nlohmann::json config_snapshot;
  std::array<CaptionTableEntry, kNumStages> captions;
  std::vector<ImageRecord> records;

  void save(const std::string& path) const;
  static DatasetManifest load(const std::string& path);
  std::array<std::array<int, kNumSplits>, kNumStages> split_counts() const;
};

// Generates per-class images (stratified seeded split assignment, timeline
// point sampled within each stage band), template caption sets, and the
// manifest. Deterministic in master_seed. On failure, files written by this
// run are removed before the error propagates.
DatasetManifest build_dataset(const DatasetConfig& config);

inline std::string manifest_path(const std::string& out_dir) {
  return out_dir + "/manifest.jsonl";
}

// Read-only view over a built dataset; checksums are verified at open.
class DatasetView {
 public:
  static DatasetView open(const std::string& manifest_file);

  const DatasetManifest& manifest() const { return manifest_; }
  const std::vector<ImageRecord>& records() const { return manifest_.records; }
  const std::string& root() const { return root_; }

  std::vector<int> split_indices(Split split) const;
  RasterImage load_image(int record_index) const;
  const std::vector<std::string>& captions(StageClass stage) const;
  std::array<std::vector<std::string>, kNumStages> caption_sets() const { return captions_; }

 private:
  DatasetManifest manifest_;
  std::array<std::vector<std::string>, kNumStages> captions_;
  std::string root_;
};

struct BatchItem {
  int record_index = 0;
  StageClass stage = StageClass::Spore;
  int caption_id = 0;
};

// Uniform without-replacement draw of batch_size records from the split;
// each image is paired with a uniformly chosen caption of its class.
std::vector<BatchItem> sample_batch(const DatasetView& view, Split split, int batch_size,
                                    Rng& rng);

// One epoch: a seeded permutation of the split, chunked into batches of at
// most batch_size (the final batch may be smaller).
std::vector<std::vector<BatchItem>> epoch_batches(const DatasetView& view, Split split,
                                                  int batch_size, Rng& rng);

}  // namespace fungi
