#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "fungi/chat_client.hpp"
#include "fungi/dataset.hpp"
#include "fungi/train.hpp"
#include "fungi/zeroshot.hpp"

namespace fungi {

struct EvalOptions {
  Split split = Split::Val;
  PrototypeMode prototype_mode = PrototypeMode::Mean;
};

// Top-level run configuration: one seed, one output directory, and the
// dataset/caption/train/eval sub-configs. Loaded from JSON; flags override
// fields; the effective config is serialized next to every run's outputs.
struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "runs/default";
  int threads = 1;
  std::string caption_provider = "template";  // or "remote"
  DatasetConfig dataset;
  EndpointConfig endpoint;
  TrainConfig train;
  EvalOptions eval;

  // Pushes seed/out_dir/threads into the sub-configs.
  void propagate();
  void validate() const;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
  void save(const std::string& path) const;

  // Fingerprint of the canonical JSON dump; embedded in checkpoints and
  // compared against the manifest snapshot at eval time.
  std::uint64_t config_hash() const;
};

// Hash binding a checkpoint to the dataset it was trained on.
std::uint64_t manifest_config_hash(const DatasetManifest& manifest);

}  // namespace fungi
