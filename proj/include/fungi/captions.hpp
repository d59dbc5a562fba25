#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fungi/rng.hpp"
#include "fungi/types.hpp"

namespace fungi {

// Caption frame with one {class} slot and at least one {characteristics}
// slot, plus per-class attribute pools covering shape, color, branching and
// growth stage.
struct PromptTemplate {
  std::string frame = "a {class} growth stage characterized by {characteristics}";
  std::array<std::vector<std::string>, kNumStages> pools;

  void validate() const;  // throws ConfigError
};

PromptTemplate default_prompt_template();

struct CaptionConstraints {
  int min_tokens = 8;   // L_min
  int max_tokens = 40;  // L_max
  int batch_size = 10;  // B
  int total = 50;       // N
  double sampling_temperature = 0.9;

  int batch_count() const;  // ceil(total / batch_size)
  void validate() const;
};

struct CaptionSet {
  StageClass stage = StageClass::Spore;
  std::vector<std::string> captions;
  std::vector<int> batch_index;  // 1-based batch id per caption
  std::string provider = "template";
  bool dedup_ok = true;  // false when duplicates survived the retry budget

  int batch_count() const;
};

// One batch of exactly B captions. Each caption fills the frame with 2-4
// characteristics drawn without replacement, Boltzmann-weighted by
// sampling_temperature over a fixed per-phrase salience. Deterministic in
// (rng seed, batch_index); the caller's rng is not advanced.
std::vector<std::string> generate_batch(StageClass stage, const PromptTemplate& tmpl,
                                        const CaptionConstraints& constraints,
                                        int batch_index, const Rng& rng);

// Union of ceil(N/B) batches. Duplicates are resampled up to a retry budget
// and otherwise kept with dedup_ok = false.
CaptionSet generate_set(StageClass stage, const PromptTemplate& tmpl,
                        const CaptionConstraints& constraints, std::uint64_t seed);

struct CaptionStats {
  int count = 0;
  double mean_tokens = 0.0;
  int vocabulary = 0;
};

// Counts use the same tokenizer as the text encoder.
CaptionStats caption_stats(const CaptionSet& set);

void write_caption_file(const CaptionSet& set, const std::string& path);
std::vector<std::string> read_caption_file(const std::string& path);

}  // namespace fungi
