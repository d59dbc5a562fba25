#pragma once

#include <string>
#include <vector>

#include "fungi/encoder.hpp"
#include "fungi/loss.hpp"
#include "fungi/raster.hpp"
#include "fungi/types.hpp"

namespace fungi {

// One aligned training batch: images[i] is paired with captions[i], and
// labels[i] is the shared class ordinal used to build the positive sets.
struct Batch {
  std::vector<const RasterImage*> images;
  std::vector<std::string> captions;
  std::vector<int> labels;
};

struct BatchGradients {
  EncoderPair grads;  // tensor-for-tensor with the parameters; log_temperature
                      // carries d(loss)/d(log tau)
  LossBreakdown loss;
};

// Forward loss only (no gradients); shares the exact forward path with
// loss_gradients.
LossBreakdown batch_loss(const EncoderPair& params, const Batch& batch);

// Exact reverse-mode gradients through encoding, L2 normalization, cosine
// similarity and the contrastive loss. Frozen groups (params.mask) come back
// as exact zeros. Throws NumericError naming the first non-finite tensor.
BatchGradients loss_gradients(const EncoderPair& params, const Batch& batch);

}  // namespace fungi
