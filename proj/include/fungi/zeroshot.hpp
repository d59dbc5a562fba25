#pragma once

#include <array>
#include <string>
#include <vector>

#include "fungi/dataset.hpp"
#include "fungi/encoder.hpp"
#include "fungi/types.hpp"

namespace fungi {

enum class PrototypeMode { Mean, Max };

const char* prototype_mode_name(PrototypeMode mode);
PrototypeMode prototype_mode_from_name(const std::string& name);

// Per-class text anchors: either the renormalized mean caption embedding or
// the full embedding list scored by max similarity.
struct ClassPrototypeSet {
  PrototypeMode mode = PrototypeMode::Mean;
  std::array<Vec, kNumStages> mean;  // unit vectors (Mean mode)
  std::array<Mat, kNumStages> all;   // caption embeddings as rows (Max mode)
};

ClassPrototypeSet build_prototypes(
    const EncoderPair& pair, const std::array<std::vector<std::string>, kNumStages>& caption_sets,
    PrototypeMode mode);

// Dot product of unit vectors (equals cosine). Norms are contract-checked to
// within 1e-3.
double similarity(const Vec& image_embedding, const Vec& text_embedding);

// Deterministic argmax with ties broken by the lower class ordinal.
int argmax_class(const Vec& scores);

struct Classification {
  StageClass predicted = StageClass::Spore;
  Vec scores;  // one per class, in ordinal order
};

Classification classify(const Vec& image_embedding, const ClassPrototypeSet& prototypes);
Classification classify_image(const RasterImage& image, const EncoderPair& pair,
                              const ClassPrototypeSet& prototypes);

struct SampleResult {
  int record_index = -1;
  StageClass truth = StageClass::Spore;
  StageClass predicted = StageClass::Spore;
  Vec scores;
  Vec confidence;  // softmax(scores / tau) with the trained temperature
};

struct EvalReport {
  double recall_at_1 = 0.0;
  std::array<double, kNumStages> per_class_accuracy{};
  Eigen::Matrix<int, kNumStages, kNumStages> confusion;  // rows: truth, cols: predicted
  std::vector<SampleResult> samples;
  double tau = 0.0;

  int total() const { return static_cast<int>(samples.size()); }
  int misclassified() const;
  // Fraction of misclassifications between adjacent stages; 1 when there are
  // no misclassifications at all.
  double adjacent_miss_fraction() const;
};

EvalReport evaluate(const DatasetView& view, Split split, const EncoderPair& pair,
                    const ClassPrototypeSet& prototypes);

// report.json plus plot-data files (confusion.csv, scores.csv) under dir.
void write_report(const EvalReport& report, const std::string& dir);

}  // namespace fungi
