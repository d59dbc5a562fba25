#pragma once

#include <cmath>
#include <vector>

#include "fungi/error.hpp"
#include "fungi/types.hpp"

namespace fungi {

// In-batch positive index sets: for image row q the same-class text columns
// (P_q), and for text column r the same-class image rows (P_r).
struct PositiveSets {
  std::vector<std::vector<int>> images_to_texts;
  std::vector<std::vector<int>> texts_to_images;

  static PositiveSets from_labels(const std::vector<int>& labels) {
    PositiveSets sets;
    const int n = static_cast<int>(labels.size());
    sets.images_to_texts.resize(static_cast<std::size_t>(n));
    sets.texts_to_images.resize(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
      for (int r = 0; r < n; ++r) {
        if (labels[static_cast<std::size_t>(q)] == labels[static_cast<std::size_t>(r)]) {
          sets.images_to_texts[static_cast<std::size_t>(q)].push_back(r);
          sets.texts_to_images[static_cast<std::size_t>(r)].push_back(q);
        }
      }
    }
    return sets;
  }

  void validate(Index n) const {
    if (static_cast<Index>(images_to_texts.size()) != n ||
        static_cast<Index>(texts_to_images.size()) != n) {
      throw DataError("positive sets do not match the batch size");
    }
    for (const auto& side : {&images_to_texts, &texts_to_images}) {
      for (const auto& set : *side) {
        if (set.empty()) throw DataError("empty positive set in batch");
        for (int idx : set) {
          if (idx < 0 || idx >= n) throw DataError("positive index out of range");
        }
      }
    }
  }
};

struct LossBreakdown {
  double image = 0.0;
  double text = 0.0;
  double total = 0.0;
};

struct SimilarityMatrix {
  Mat s;       // rows: images, cols: texts; cosine similarities
  double tau;  // temperature
};

// Cosine similarity of unit-norm row embeddings: plain row-by-row dot
// products.
template <class DerivedA, class DerivedB>
Mat cosine_similarity_matrix(const Eigen::MatrixBase<DerivedA>& image_rows,
                             const Eigen::MatrixBase<DerivedB>& text_rows) {
  return image_rows * text_rows.transpose();
}

// Symmetric multi-positive contrastive loss. The image term averages, per
// image row, -log softmax(S/tau) over its positive text columns; the text
// term mirrors it over columns. Softmaxes are stabilized by max subtraction.
template <class Derived>
LossBreakdown contrastive_loss(const Eigen::MatrixBase<Derived>& sim, const PositiveSets& pos,
                               double tau) {
  const Index n = sim.rows();
  if (sim.cols() != n || n == 0) throw DataError("similarity matrix must be square and non-empty");
  if (!sim.allFinite()) throw NumericError("similarity matrix has non-finite entries");
  if (!(tau > 0.0)) throw NumericError("temperature must be positive");
  pos.validate(n);

  const Mat z = sim / tau;
  LossBreakdown out;
  for (Index q = 0; q < n; ++q) {
    const double m = z.row(q).maxCoeff();
    const double lse = m + std::log((z.row(q).array() - m).exp().sum());
    const auto& positives = pos.images_to_texts[static_cast<std::size_t>(q)];
    double acc = 0.0;
    for (int r : positives) acc += z(q, r) - lse;
    out.image -= acc / static_cast<double>(positives.size());
  }
  out.image /= static_cast<double>(n);
  for (Index r = 0; r < n; ++r) {
    const double m = z.col(r).maxCoeff();
    const double lse = m + std::log((z.col(r).array() - m).exp().sum());
    const auto& positives = pos.texts_to_images[static_cast<std::size_t>(r)];
    double acc = 0.0;
    for (int q : positives) acc += z(q, r) - lse;
    out.text -= acc / static_cast<double>(positives.size());
  }
  out.text /= static_cast<double>(n);
  out.total = out.image + out.text;
  return out;
}

inline LossBreakdown contrastive_loss(const SimilarityMatrix& sim, const PositiveSets& pos) {
  return contrastive_loss(sim.s, pos, sim.tau);
}

// Gradient of the loss above with respect to the similarity matrix, plus
// d(loss)/d(log tau) written through the out-parameter.
template <class Derived>
Mat contrastive_loss_grad(const Eigen::MatrixBase<Derived>& sim, const PositiveSets& pos,
                          double tau, double* d_log_tau) {
  const Index n = sim.rows();
  if (sim.cols() != n || n == 0) throw DataError("similarity matrix must be square and non-empty");
  if (!sim.allFinite()) throw NumericError("similarity matrix has non-finite entries");
  pos.validate(n);

  const Mat z = sim / tau;
  Mat dz = Mat::Zero(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index q = 0; q < n; ++q) {
    const double m = z.row(q).maxCoeff();
    const Eigen::ArrayXd e = (z.row(q).array() - m).exp();
    const Eigen::ArrayXd softmax = e / e.sum();
    dz.row(q) += inv_n * softmax.matrix().transpose();
    const auto& positives = pos.images_to_texts[static_cast<std::size_t>(q)];
    const double share = inv_n / static_cast<double>(positives.size());
    for (int r : positives) dz(q, r) -= share;
  }
  for (Index r = 0; r < n; ++r) {
    const double m = z.col(r).maxCoeff();
    const Eigen::ArrayXd e = (z.col(r).array() - m).exp();
    const Eigen::ArrayXd softmax = e / e.sum();
    dz.col(r) += inv_n * softmax.matrix();
    const auto& positives = pos.texts_to_images[static_cast<std::size_t>(r)];
    const double share = inv_n / static_cast<double>(positives.size());
    for (int q : positives) dz(q, r) -= share;
  }
  if (d_log_tau) {
    // z = S * exp(-log tau), so dL/d(log tau) = -sum(dL/dz .* z).
    *d_log_tau = -(dz.array() * z.array()).sum();
  }
  return dz / tau;
}

}  // namespace fungi
