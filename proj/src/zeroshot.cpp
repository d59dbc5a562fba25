#include "fungi/zeroshot.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "fungi/error.hpp"
#include "fungi/util.hpp"

namespace fungi {

namespace {

void check_unit(const Vec& v, const char* what) {
  if (std::abs(v.norm() - 1.0) > 1e-3)
    throw DataError(std::string(what) + " embedding is not unit-norm");
}

}  // namespace

const char* prototype_mode_name(PrototypeMode mode) {
  return mode == PrototypeMode::Mean ? "mean" : "max";
}

PrototypeMode prototype_mode_from_name(const std::string& name) {
  if (name == "mean") return PrototypeMode::Mean;
  if (name == "max") return PrototypeMode::Max;
  throw ConfigError("unknown prototype mode: " + name);
}

ClassPrototypeSet build_prototypes(
    const EncoderPair& pair, const std::array<std::vector<std::string>, kNumStages>& caption_sets,
    PrototypeMode mode) {
  ClassPrototypeSet set;
  set.mode = mode;
  for (int k = 0; k < kNumStages; ++k) {
    const auto& captions = caption_sets[static_cast<std::size_t>(k)];
    if (captions.empty())
      throw ConfigError(std::string("no captions for class ") +
                        stage_name(static_cast<StageClass>(k)));
    const Mat emb = encode_texts(pair, captions);
    set.all[static_cast<std::size_t>(k)] = emb;
    Vec mean = emb.colwise().mean().transpose();
    const double norm = mean.norm();
    if (norm == 0.0) throw NumericError("degenerate zero mean prototype");
    set.mean[static_cast<std::size_t>(k)] = mean / norm;
  }
  return set;
}

double similarity(const Vec& image_embedding, const Vec& text_embedding) {
  check_unit(image_embedding, "image");
  check_unit(text_embedding, "text");
  return image_embedding.dot(text_embedding);
}

int argmax_class(const Vec& scores) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(scores.size()); ++k) {
    if (scores(k) > scores(best)) best = k;
  }
  return best;
}

Classification classify(const Vec& image_embedding, const ClassPrototypeSet& prototypes) {
  Classification out;
  out.scores = Vec(kNumStages);
  for (int k = 0; k < kNumStages; ++k) {
    if (prototypes.mode == PrototypeMode::Mean) {
      const Vec& proto = prototypes.mean[static_cast<std::size_t>(k)];
      if (proto.size() == 0)
        throw ConfigError(std::string("missing prototype for class ") +
                          stage_name(static_cast<StageClass>(k)));
      out.scores(k) = image_embedding.dot(proto);
    } else {
      const Mat& all = prototypes.all[static_cast<std::size_t>(k)];
      if (all.rows() == 0)
        throw ConfigError(std::string("missing prototype for class ") +
                          stage_name(static_cast<StageClass>(k)));
      out.scores(k) = (all * image_embedding).maxCoeff();
    }
  }
  out.predicted = stage_from_ordinal(argmax_class(out.scores));
  return out;
}

Classification classify_image(const RasterImage& image, const EncoderPair& pair,
                              const ClassPrototypeSet& prototypes) {
  return classify(encode_image(pair, image), prototypes);
}

int EvalReport::misclassified() const {
  int count = 0;
  for (const auto& s : samples) count += s.truth != s.predicted ? 1 : 0;
  return count;
}

double EvalReport::adjacent_miss_fraction() const {
  int misses = 0;
  int adjacent = 0;
  for (const auto& s : samples) {
    if (s.truth == s.predicted) continue;
    ++misses;
    if (std::abs(ordinal(s.truth) - ordinal(s.predicted)) == 1) ++adjacent;
  }
  return misses == 0 ? 1.0 : static_cast<double>(adjacent) / misses;
}

EvalReport evaluate(const DatasetView& view, Split split, const EncoderPair& pair,
                    const ClassPrototypeSet& prototypes) {
  const auto indices = view.split_indices(split);
  if (indices.empty()) throw DataError(std::string("split ") + split_name(split) + " is empty");

  EvalReport report;
  report.tau = pair.temperature();
  report.confusion.setZero();
  report.samples.reserve(indices.size());
  int correct = 0;
  std::array<int, kNumStages> class_total{};
  std::array<int, kNumStages> class_correct{};

  for (int record_index : indices) {
    const RasterImage image = view.load_image(record_index);
    const auto truth = view.records()[static_cast<std::size_t>(record_index)].stage;
    const Classification c = classify_image(image, pair, prototypes);

    SampleResult sample;
    sample.record_index = record_index;
    sample.truth = truth;
    sample.predicted = c.predicted;
    sample.scores = c.scores;
    const Vec scaled = c.scores / report.tau;
    const double m = scaled.maxCoeff();
    Vec soft = (scaled.array() - m).exp();
    sample.confidence = soft / soft.sum();
    report.samples.push_back(std::move(sample));

    ++report.confusion(ordinal(truth), ordinal(c.predicted));
    ++class_total[static_cast<std::size_t>(ordinal(truth))];
    if (truth == c.predicted) {
      ++correct;
      ++class_correct[static_cast<std::size_t>(ordinal(truth))];
    }
  }
  report.recall_at_1 = static_cast<double>(correct) / static_cast<double>(indices.size());
  for (int k = 0; k < kNumStages; ++k) {
    report.per_class_accuracy[static_cast<std::size_t>(k)] =
        class_total[static_cast<std::size_t>(k)] == 0
            ? 0.0
            : static_cast<double>(class_correct[static_cast<std::size_t>(k)]) /
                  class_total[static_cast<std::size_t>(k)];
  }
  return report;
}

void write_report(const EvalReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir + ": " + ec.message());

  nlohmann::json confusion = nlohmann::json::array();
  for (int t = 0; t < kNumStages; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < kNumStages; ++p) row.push_back(report.confusion(t, p));
    confusion.push_back(row);
  }
  nlohmann::json j{
      {"recall_at_1", report.recall_at_1},
      {"total", report.total()},
      {"misclassified", report.misclassified()},
      {"adjacent_miss_fraction", report.adjacent_miss_fraction()},
      {"tau", report.tau},
      {"per_class_accuracy",
       nlohmann::json{{"spore", report.per_class_accuracy[0]},
                      {"hyphae", report.per_class_accuracy[1]},
                      {"mycelium", report.per_class_accuracy[2]}}},
      {"confusion", confusion},
  };
  write_file(dir + "/report.json", j.dump(2) + "\n");

  std::string confusion_csv = "truth\\predicted";
  for (int p = 0; p < kNumStages; ++p)
    confusion_csv += std::string(",") + stage_name(static_cast<StageClass>(p));
  confusion_csv += '\n';
  for (int t = 0; t < kNumStages; ++t) {
    confusion_csv += stage_name(static_cast<StageClass>(t));
    for (int p = 0; p < kNumStages; ++p)
      confusion_csv += "," + std::to_string(report.confusion(t, p));
    confusion_csv += '\n';
  }
  write_file(dir + "/confusion.csv", confusion_csv);

  std::string scores_csv =
      "record_index,truth,predicted,score_spore,score_hyphae,score_mycelium,"
      "conf_spore,conf_hyphae,conf_mycelium\n";
  char buf[64];
  for (const auto& s : report.samples) {
    scores_csv += std::to_string(s.record_index);
    scores_csv += std::string(",") + stage_name(s.truth) + "," + stage_name(s.predicted);
    for (int k = 0; k < kNumStages; ++k) {
      std::snprintf(buf, sizeof(buf), ",%.9f", s.scores(k));
      scores_csv += buf;
    }
    for (int k = 0; k < kNumStages; ++k) {
      std::snprintf(buf, sizeof(buf), ",%.9f", s.confidence(k));
      scores_csv += buf;
    }
    scores_csv += '\n';
  }
  write_file(dir + "/scores.csv", scores_csv);
}

}  // namespace fungi
