#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fungi/dataset.hpp"
#include "fungi/error.hpp"
#include "fungi/rng.hpp"
#include "fungi/util.hpp"
#include "fungi/zeroshot.hpp"

using namespace fungi;
namespace fs = std::filesystem;

namespace {

Vec unit_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v.normalized();
}

Vec random_unit(Index d, Rng& rng) {
  Vec v(d);
  for (Index i = 0; i < d; ++i) v(i) = rng.uniform(-1.0, 1.0);
  return v.normalized();
}

ClassPrototypeSet toy_prototypes(Rng& rng, Index d = 8) {
  ClassPrototypeSet set;
  set.mode = PrototypeMode::Mean;
  for (int k = 0; k < kNumStages; ++k) set.mean[static_cast<std::size_t>(k)] = random_unit(d, rng);
  return set;
}

}  // namespace

TEST_CASE("similarity of unit vectors is their dot product") {
  const Vec a = unit_vec({1.0, 0.0, 0.0});
  const Vec b = unit_vec({0.0, 1.0, 0.0});
  CHECK(similarity(a, a) == doctest::Approx(1.0));
  CHECK(similarity(a, b) == doctest::Approx(0.0));
  CHECK(similarity(a, Vec(-a)) == doctest::Approx(-1.0));

  Vec not_unit = a * 1.5;
  CHECK_THROWS_AS(similarity(not_unit, b), DataError);
}

TEST_CASE("classify picks the most similar prototype with ordinal tie-breaks") {
  Rng rng(2);
  auto prototypes = toy_prototypes(rng);
  const Vec query = prototypes.mean[1];
  const auto result = classify(query, prototypes);
  CHECK(result.predicted == StageClass::Hyphae);  // self-match scores 1.0
  CHECK(result.scores(1) == doctest::Approx(1.0));

  // Exact ties break toward the lower ordinal.
  prototypes.mean[2] = prototypes.mean[1];
  const auto tied = classify(query, prototypes);
  CHECK(tied.predicted == StageClass::Hyphae);

  ClassPrototypeSet missing;
  missing.mode = PrototypeMode::Mean;
  missing.mean[0] = query;
  CHECK_THROWS_AS(classify(query, missing), ConfigError);
}

TEST_CASE("argmax is invariant under positive scaling and constant shifts") {
  Rng rng(33);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec scores(kNumStages);
    for (int k = 0; k < kNumStages; ++k) scores(k) = rng.uniform(-1.0, 1.0);
    const int base = argmax_class(scores);
    const double scale = rng.uniform(0.01, 50.0);
    const double shift = rng.uniform(-10.0, 10.0);
    CHECK(argmax_class(Vec(scores * scale)) == base);
    CHECK(argmax_class(Vec(scores.array() + shift)) == base);
  }
}

TEST_CASE("classify agrees with the exhaustive dot-product loop") {
  Rng rng(44);
  const Index d = 16;
  const auto prototypes = toy_prototypes(rng, d);
  for (int sample = 0; sample < 50; ++sample) {
    const Vec query = random_unit(d, rng);
    const auto result = classify(query, prototypes);
    int best = 0;
    double best_score = -2.0;
    for (int k = 0; k < kNumStages; ++k) {
      const double score = query.dot(prototypes.mean[static_cast<std::size_t>(k)]);
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    CHECK(ordinal(result.predicted) == best);
  }
}

TEST_CASE("prototype construction: mean of one, duplication idempotence, max mode") {
  // A tiny trained-free encoder pair is enough: build from a fixed vocab.
  EncoderDims dims;
  dims.patch = 8;
  dims.hidden = 8;
  dims.text_hidden = 8;
  dims.out = 8;
  const Vocabulary vocab = Vocabulary::build(
      {"spore small round", "hyphae thread thin", "mycelium web dense"});
  const EncoderPair pair = init_params(9, dims, vocab);

  std::array<std::vector<std::string>, kNumStages> one{
      std::vector<std::string>{"spore small round"},
      std::vector<std::string>{"hyphae thread thin"},
      std::vector<std::string>{"mycelium web dense"},
  };
  const auto single = build_prototypes(pair, one, PrototypeMode::Mean);
  const Vec direct = encode_text(pair, "spore small round");
  CHECK((single.mean[0] - direct).norm() <= 1e-12);

  auto duplicated = one;
  for (auto& captions : duplicated) {
    captions.push_back(captions[0]);
    captions.push_back(captions[0]);
  }
  const auto dup = build_prototypes(pair, duplicated, PrototypeMode::Mean);
  for (int k = 0; k < kNumStages; ++k) {
    CHECK((dup.mean[static_cast<std::size_t>(k)] - single.mean[static_cast<std::size_t>(k)])
              .norm() <= 1e-12);
  }

  // Mean and max scoring agree on cleanly separated classes.
  const auto max_mode = build_prototypes(pair, one, PrototypeMode::Max);
  for (int k = 0; k < kNumStages; ++k) {
    const Vec query = single.mean[static_cast<std::size_t>(k)];
    CHECK(classify(query, single).predicted == classify(query, max_mode).predicted);
  }

  std::array<std::vector<std::string>, kNumStages> empty = one;
  empty[1].clear();
  CHECK_THROWS_AS(build_prototypes(pair, empty, PrototypeMode::Mean), ConfigError);
}

TEST_CASE("evaluate tallies recall, confusion and confidence per sample") {
  const auto out = (fs::temp_directory_path() / "fungi_zs_eval").string();
  fs::remove_all(out);
  DatasetConfig dc;
  dc.per_class_count = 10;
  dc.master_seed = 21;
  dc.out_dir = out;
  dc.captions.total = 8;
  dc.captions.batch_size = 4;
  build_dataset(dc);
  const auto view = DatasetView::open(manifest_path(out));

  EncoderDims dims;
  dims.patch = 8;
  dims.hidden = 8;
  dims.text_hidden = 8;
  dims.out = 8;
  std::vector<std::string> all;
  for (int k = 0; k < kNumStages; ++k) {
    const auto& captions = view.captions(static_cast<StageClass>(k));
    all.insert(all.end(), captions.begin(), captions.end());
  }
  const EncoderPair pair = init_params(5, dims, Vocabulary::build(all));
  const auto prototypes = build_prototypes(pair, view.caption_sets(), PrototypeMode::Mean);

  const auto report = evaluate(view, Split::Train, pair, prototypes);
  CHECK(report.total() == 24);

  // Hand tally from the per-sample list is the published recall.
  int correct = 0;
  for (const auto& sample : report.samples) {
    if (sample.truth == sample.predicted) ++correct;
    CHECK(sample.confidence.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sample.confidence.minCoeff() >= 0.0);
  }
  CHECK(report.recall_at_1 == doctest::Approx(static_cast<double>(correct) / 24));

  // Confusion rows sum to the per-class sample counts; the trace is recall.
  int trace = 0;
  for (int t = 0; t < kNumStages; ++t) {
    int row = 0;
    for (int p = 0; p < kNumStages; ++p) row += report.confusion(t, p);
    CHECK(row == 8);
    trace += report.confusion(t, t);
  }
  CHECK(report.recall_at_1 == doctest::Approx(trace / 24.0));

  // Determinism: the same checkpoint and split reproduce the report.
  const auto again = evaluate(view, Split::Train, pair, prototypes);
  CHECK(again.recall_at_1 == report.recall_at_1);
  CHECK((again.confusion - report.confusion).cwiseAbs().sum() == 0);

  write_report(report, out + "/eval");
  CHECK(fs::exists(out + "/eval/report.json"));
  CHECK(fs::exists(out + "/eval/confusion.csv"));
  CHECK(fs::exists(out + "/eval/scores.csv"));
  fs::remove_all(out);
}

TEST_CASE("degenerate predictors score exactly their hit fraction") {
  // All predictions forced to one class on a balanced set -> recall 1/3.
  EvalReport report;
  report.confusion.setZero();
  for (int k = 0; k < kNumStages; ++k) {
    for (int i = 0; i < 10; ++i) {
      SampleResult s;
      s.truth = static_cast<StageClass>(k);
      s.predicted = StageClass::Spore;
      report.samples.push_back(s);
      ++report.confusion(k, 0);
    }
  }
  int correct = 0;
  for (const auto& s : report.samples) correct += s.truth == s.predicted ? 1 : 0;
  CHECK(static_cast<double>(correct) / report.total() == doctest::Approx(1.0 / 3.0));
  CHECK(report.misclassified() == 20);
  // spore<-hyphae is adjacent, spore<-mycelium is not.
  CHECK(report.adjacent_miss_fraction() == doctest::Approx(0.5));
}
