#pragma once

#include <cstdint>
#include <vector>

#include "fungi/encoder.hpp"

namespace fungi {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

// Decoupled-weight-decay Adam over the unfrozen groups only. Frozen tensors
// are untouched: no moment updates, no decay, no step count. Each tensor's
// bias correction counts its own updates, so groups unfrozen mid-run start
// from a fresh step 1. log tau is clamped into [ln tau_min, ln tau_max]
// after every update.
class AdamW {
 public:
  AdamW(const EncoderPair& params, AdamWConfig config);

  void step(EncoderPair& params, const EncoderPair& grads);

 private:
  AdamWConfig cfg_;
  EncoderPair m_;
  EncoderPair v_;
  std::vector<std::int64_t> steps_;
};

// Progressive unfreezing: at epoch 0 only the heads and log tau train;
// every `interval` epochs one more group unfreezes in reverse depth order
// (g3, then g2, then g1). Monotone, never re-freezes.
FreezeMask unfreeze_schedule(int epoch, int interval = 5);

}  // namespace fungi
