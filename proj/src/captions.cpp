#include "fungi/captions.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fungi/error.hpp"
#include "fungi/util.hpp"

namespace fungi {

namespace {

constexpr const char* kClassSlot = "{class}";
constexpr const char* kCharacteristicsSlot = "{characteristics}";
constexpr int kMinCharacteristics = 2;
constexpr int kMaxCharacteristics = 4;
constexpr int kLengthRetries = 64;
constexpr int kDedupRetries = 32;

int count_occurrences(const std::string& text, const std::string& needle) {
  int count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + value.size())) {
    text.replace(pos, needle.size(), value);
  }
  return text;
}

// Weighted draw of k pool indices without replacement. Salience decreases
// with pool position; weights are exp(salience / temperature).
std::vector<int> draw_characteristics(const std::vector<std::string>& pool, int k,
                                      double temperature, Rng& rng) {
  std::vector<int> remaining(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) remaining[i] = static_cast<int>(i);
  std::vector<double> weights(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double salience = 1.0 - static_cast<double>(i) / static_cast<double>(pool.size());
    weights[i] = std::exp(salience / temperature);
  }
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  for (int draw = 0; draw < k; ++draw) {
    double total = 0.0;
    for (int idx : remaining) total += weights[static_cast<std::size_t>(idx)];
    double ticket = rng.uniform() * total;
    std::size_t pick = remaining.size() - 1;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      ticket -= weights[static_cast<std::size_t>(remaining[j])];
      if (ticket < 0.0) {
        pick = j;
        break;
      }
    }
    chosen.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return chosen;
}

std::string join_characteristics(const std::vector<std::string>& pool,
                                 const std::vector<int>& chosen) {
  std::string out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (i > 0) out += (i + 1 == chosen.size()) ? " and " : ", ";
    out += pool[static_cast<std::size_t>(chosen[i])];
  }
  return out;
}

std::string make_caption(StageClass stage, const PromptTemplate& tmpl,
                         const CaptionConstraints& constraints, Rng& rng) {
  const auto& pool = tmpl.pools[static_cast<std::size_t>(ordinal(stage))];
  for (int attempt = 0; attempt < kLengthRetries; ++attempt) {
    const int k = kMinCharacteristics +
                  static_cast<int>(rng.uniform_int(kMaxCharacteristics - kMinCharacteristics + 1));
    const auto chosen = draw_characteristics(pool, k, constraints.sampling_temperature, rng);
    std::string caption = replace_all(tmpl.frame, kClassSlot, stage_name(stage));
    caption = replace_all(caption, kCharacteristicsSlot, join_characteristics(pool, chosen));
    const int tokens = token_count(caption);
    if (tokens >= constraints.min_tokens && tokens <= constraints.max_tokens) return caption;
  }
  throw ConfigError("cannot satisfy caption length bounds [" +
                    std::to_string(constraints.min_tokens) + ", " +
                    std::to_string(constraints.max_tokens) + "] with the configured template");
}

}  // namespace

void PromptTemplate::validate() const {
  if (count_occurrences(frame, kClassSlot) != 1)
    throw ConfigError("caption frame must contain exactly one {class} slot");
  if (count_occurrences(frame, kCharacteristicsSlot) < 1)
    throw ConfigError("caption frame must contain at least one {characteristics} slot");
  for (int k = 0; k < kNumStages; ++k) {
    if (static_cast<int>(pools[static_cast<std::size_t>(k)].size()) < kMaxCharacteristics) {
      throw ConfigError(std::string("characteristics pool for ") +
                        stage_name(static_cast<StageClass>(k)) + " needs at least " +
                        std::to_string(kMaxCharacteristics) + " phrases");
    }
  }
}

PromptTemplate default_prompt_template() {
  PromptTemplate tmpl;
  tmpl.pools[0] = {
      "small round cells",          "a bright yellow tint",  "smooth circular outlines",
      "isolated dormant bodies",    "an early growth phase", "scattered single points",
      "compact oval forms",         "no visible branching",
  };
  tmpl.pools[1] = {
      "long thread like filaments", "a warm orange coloration", "sparse branching tips",
      "slender extending tubes",    "a middle growth phase",    "visibly segmented strands",
      "outward reaching arms",      "thin tapering walls",
  };
  tmpl.pools[2] = {
      "a dense interwoven network", "a deep red hue",         "heavily branched filaments",
      "overlapping tangled threads", "a mature growth phase", "broad spreading mats",
      "layered web like growth",    "thick clustered strands",
  };
  return tmpl;
}

int CaptionConstraints::batch_count() const {
  if (total <= 0) return 0;
  return (total + batch_size - 1) / batch_size;
}

void CaptionConstraints::validate() const {
  if (min_tokens < 1 || max_tokens < min_tokens)
    throw ConfigError("caption length bounds require 1 <= min_tokens <= max_tokens");
  if (batch_size < 1) throw ConfigError("caption batch_size must be positive");
  if (total < 0) throw ConfigError("caption total must be non-negative");
  if (total > 0 && batch_size > total)
    throw ConfigError("caption batch_size must not exceed total");
  if (sampling_temperature <= 0) throw ConfigError("sampling_temperature must be positive");
}

int CaptionSet::batch_count() const {
  int max_index = 0;
  for (int k : batch_index) max_index = std::max(max_index, k);
  return max_index;
}

std::vector<std::string> generate_batch(StageClass stage, const PromptTemplate& tmpl,
                                        const CaptionConstraints& constraints,
                                        int batch_index, const Rng& rng) {
  tmpl.validate();
  constraints.validate();
  if (batch_index < 1) throw ConfigError("batch_index is 1-based");
  Rng local = rng.split(static_cast<std::uint64_t>(batch_index));
  std::vector<std::string> batch;
  batch.reserve(static_cast<std::size_t>(constraints.batch_size));
  for (int i = 0; i < constraints.batch_size; ++i) {
    batch.push_back(make_caption(stage, tmpl, constraints, local));
  }
  return batch;
}

CaptionSet generate_set(StageClass stage, const PromptTemplate& tmpl,
                        const CaptionConstraints& constraints, std::uint64_t seed) {
  tmpl.validate();
  constraints.validate();
  CaptionSet set;
  set.stage = stage;
  set.provider = "template";
  std::set<std::string> seen;
  for (int k = 1; k <= constraints.batch_count(); ++k) {
    Rng local = Rng(seed).split(static_cast<std::uint64_t>(k));
    for (int i = 0; i < constraints.batch_size; ++i) {
      std::string caption = make_caption(stage, tmpl, constraints, local);
      for (int retry = 0; retry < kDedupRetries && seen.count(caption) > 0; ++retry) {
        caption = make_caption(stage, tmpl, constraints, local);
      }
      if (seen.count(caption) > 0) set.dedup_ok = false;
      seen.insert(caption);
      set.captions.push_back(std::move(caption));
      set.batch_index.push_back(k);
    }
  }
  return set;
}

CaptionStats caption_stats(const CaptionSet& set) {
  CaptionStats stats;
  stats.count = static_cast<int>(set.captions.size());
  if (stats.count == 0) return stats;
  std::set<std::string> vocab;
  long total_tokens = 0;
  for (const auto& caption : set.captions) {
    const auto tokens = tokenize(caption);
    total_tokens += static_cast<long>(tokens.size());
    vocab.insert(tokens.begin(), tokens.end());
  }
  stats.mean_tokens = static_cast<double>(total_tokens) / stats.count;
  stats.vocabulary = static_cast<int>(vocab.size());
  return stats;
}

void write_caption_file(const CaptionSet& set, const std::string& path) {
  std::string out;
  for (const auto& caption : set.captions) {
    out += caption;
    out += '\n';
  }
  write_file(path, out);
}

std::vector<std::string> read_caption_file(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> captions;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) captions.push_back(line);
  }
  return captions;
}

}  // namespace fungi
