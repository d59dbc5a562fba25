#include "fungi/gradients.hpp"

#include <cmath>

#include "fungi/error.hpp"

namespace fungi {

namespace {

// Forward activations kept for the backward pass. Patch-level activations
// are stored stacked: image i owns rows [i*patches, (i+1)*patches).
struct ForwardCache {
  Index n = 0;
  Index patches_per_image = 0;

  Mat patch_input;   // (n*patches) x patch_dim
  Mat projected;     // (n*patches) x hidden (pre-g1 affine input)
  Mat h1;            // (n*patches) x hidden (tanh output)
  Mat pooled;        // n x hidden
  Mat h2;            // n x hidden
  Mat image_head;    // n x out (pre-normalization)
  Vec image_norms;   // n
  Mat image_emb;     // n x out (unit rows)

  std::vector<std::vector<int>> ids;  // token ids per caption
  Mat text_pooled;   // n x text_hidden
  Mat h3;            // n x text_hidden
  Mat text_head;     // n x out
  Vec text_norms;    // n
  Mat text_emb;      // n x out

  Mat sim;           // n x n
  double tau = 0.0;
  PositiveSets positives;
  LossBreakdown loss;
};

ForwardCache forward(const EncoderPair& params, const Batch& batch) {
  const auto n = static_cast<Index>(batch.images.size());
  if (n == 0 || batch.captions.size() != batch.images.size() ||
      batch.labels.size() != batch.images.size()) {
    throw DataError("batch images, captions and labels must be non-empty and aligned");
  }
  ForwardCache cache;
  cache.n = n;

  const Mat probe = patchify(*batch.images[0], params.dims);
  cache.patches_per_image = probe.rows();
  cache.patch_input.resize(n * cache.patches_per_image, params.dims.patch_dim());
  for (Index i = 0; i < n; ++i) {
    const Mat patches = patchify(*batch.images[static_cast<std::size_t>(i)], params.dims);
    if (patches.rows() != cache.patches_per_image)
      throw DimensionError("all batch images must share one patch grid");
    cache.patch_input.middleRows(i * cache.patches_per_image, cache.patches_per_image) = patches;
  }
  cache.projected = (cache.patch_input * params.image.w_patch).rowwise() + params.image.b_patch;
  cache.h1 = ((cache.projected * params.image.w_g1).rowwise() + params.image.b_g1).array().tanh();
  cache.pooled.resize(n, params.dims.hidden);
  for (Index i = 0; i < n; ++i) {
    cache.pooled.row(i) =
        cache.h1.middleRows(i * cache.patches_per_image, cache.patches_per_image).colwise().mean();
  }
  cache.h2 = ((cache.pooled * params.image.w_g2).rowwise() + params.image.b_g2).array().tanh();
  cache.image_head = (cache.h2 * params.image.w_head).rowwise() + params.image.b_head;
  cache.image_norms = cache.image_head.rowwise().norm();
  cache.image_emb = cache.image_head.array().colwise() / cache.image_norms.array();

  cache.ids.reserve(static_cast<std::size_t>(n));
  cache.text_pooled = Mat::Zero(n, params.dims.text_hidden);
  for (Index i = 0; i < n; ++i) {
    cache.ids.push_back(token_ids(params.vocab, batch.captions[static_cast<std::size_t>(i)]));
    for (int id : cache.ids.back()) cache.text_pooled.row(i) += params.text.embedding.row(id);
    cache.text_pooled.row(i) /= static_cast<double>(cache.ids.back().size());
  }
  cache.h3 = ((cache.text_pooled * params.text.w_g3).rowwise() + params.text.b_g3).array().tanh();
  cache.text_head = (cache.h3 * params.text.w_head).rowwise() + params.text.b_head;
  cache.text_norms = cache.text_head.rowwise().norm();
  cache.text_emb = cache.text_head.array().colwise() / cache.text_norms.array();

  cache.sim = cosine_similarity_matrix(cache.image_emb, cache.text_emb);
  cache.tau = params.temperature();
  cache.positives = PositiveSets::from_labels(batch.labels);
  cache.loss = contrastive_loss(cache.sim, cache.positives, cache.tau);
  return cache;
}

// d(unit row)/d(pre-norm row): grad_head = (grad_emb - (grad_emb . emb) emb) / norm.
Mat back_through_normalize(const Mat& grad_emb, const Mat& emb, const Vec& norms) {
  Mat grad_head(grad_emb.rows(), grad_emb.cols());
  for (Index i = 0; i < grad_emb.rows(); ++i) {
    const double along = grad_emb.row(i).dot(emb.row(i));
    grad_head.row(i) = (grad_emb.row(i) - along * emb.row(i)) / norms(i);
  }
  return grad_head;
}

}  // namespace

LossBreakdown batch_loss(const EncoderPair& params, const Batch& batch) {
  return forward(params, batch).loss;
}

BatchGradients loss_gradients(const EncoderPair& params, const Batch& batch) {
  const ForwardCache cache = forward(params, batch);
  BatchGradients out;
  out.loss = cache.loss;
  out.grads = params.zeros_like();

  double d_log_tau = 0.0;
  const Mat d_sim = contrastive_loss_grad(cache.sim, cache.positives, cache.tau, &d_log_tau);
  out.grads.log_temperature = d_log_tau;

  // Similarity is image_emb * text_emb^T over unit rows.
  const Mat d_image_emb = d_sim * cache.text_emb;
  const Mat d_text_emb = d_sim.transpose() * cache.image_emb;

  // Image tower.
  {
    const Mat d_head = back_through_normalize(d_image_emb, cache.image_emb, cache.image_norms);
    out.grads.image.w_head = cache.h2.transpose() * d_head;
    out.grads.image.b_head = d_head.colwise().sum();
    const Mat d_h2 = d_head * params.image.w_head.transpose();
    const Mat d_a2 = d_h2.array() * (1.0 - cache.h2.array().square());
    out.grads.image.w_g2 = cache.pooled.transpose() * d_a2;
    out.grads.image.b_g2 = d_a2.colwise().sum();
    const Mat d_pooled = d_a2 * params.image.w_g2.transpose();

    Mat d_h1(cache.h1.rows(), cache.h1.cols());
    const double inv_patches = 1.0 / static_cast<double>(cache.patches_per_image);
    for (Index i = 0; i < cache.n; ++i) {
      d_h1.middleRows(i * cache.patches_per_image, cache.patches_per_image) =
          (d_pooled.row(i) * inv_patches).replicate(cache.patches_per_image, 1);
    }
    const Mat d_a1 = d_h1.array() * (1.0 - cache.h1.array().square());
    out.grads.image.w_g1 = cache.projected.transpose() * d_a1;
    out.grads.image.b_g1 = d_a1.colwise().sum();
    const Mat d_projected = d_a1 * params.image.w_g1.transpose();
    out.grads.image.w_patch = cache.patch_input.transpose() * d_projected;
    out.grads.image.b_patch = d_projected.colwise().sum();
  }

  // Text tower.
  {
    const Mat d_head = back_through_normalize(d_text_emb, cache.text_emb, cache.text_norms);
    out.grads.text.w_head = cache.h3.transpose() * d_head;
    out.grads.text.b_head = d_head.colwise().sum();
    const Mat d_h3 = d_head * params.text.w_head.transpose();
    const Mat d_a3 = d_h3.array() * (1.0 - cache.h3.array().square());
    out.grads.text.w_g3 = cache.text_pooled.transpose() * d_a3;
    out.grads.text.b_g3 = d_a3.colwise().sum();
    const Mat d_pooled = d_a3 * params.text.w_g3.transpose();
    for (Index i = 0; i < cache.n; ++i) {
      const auto& ids = cache.ids[static_cast<std::size_t>(i)];
      const double share = 1.0 / static_cast<double>(ids.size());
      for (int id : ids) out.grads.text.embedding.row(id) += share * d_pooled.row(i);
    }
  }

  // Frozen groups receive exact zeros.
  for (auto& ref : tensor_refs(out.grads)) {
    if (!params.mask.is_trainable(ref.group)) {
      Eigen::Map<Eigen::ArrayXd>(ref.data, ref.size).setZero();
    } else {
      const auto values = Eigen::Map<const Eigen::ArrayXd>(ref.data, ref.size);
      if (!values.isFinite().all())
        throw NumericError(std::string("non-finite gradient in ") + ref.name);
    }
  }
  return out;
}

}  // namespace fungi
