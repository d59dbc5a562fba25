#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fungi/dataset.hpp"
#include "fungi/encoder.hpp"
#include "fungi/optim.hpp"
#include "fungi/zeroshot.hpp"

namespace fungi {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int unfreeze_interval = 5;
  std::uint64_t seed = 1;
  EncoderDims dims;

  AdamWConfig adamw() const;
  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double loss_image = 0.0;
  double loss_text = 0.0;
  double loss_total = 0.0;
  double tau = 0.0;
  std::int64_t trainable_params = 0;
  double val_recall1 = 0.0;
};

// Optional observers; both run on the training thread. before_epoch fires
// after the epoch's freeze mask is applied and before any update.
struct TrainHooks {
  std::function<void(int, const EncoderPair&)> before_epoch;
  std::function<void(int, const EncoderPair&, const EpochMetrics&)> after_epoch;
};

struct TrainResult {
  EncoderPair params;
  std::vector<EpochMetrics> metrics;
  bool diverged = false;
  int completed_epochs = 0;
};

// Epoch loop: per-epoch unfreeze schedule, seeded without-replacement
// batches, analytic gradients, AdamW on the unfrozen groups, and a val-split
// zero-shot Recall@1 after every epoch. Deterministic in config.seed. On
// divergence (non-finite loss) training stops and the last finished epoch's
// parameters are returned with diverged = true.
TrainResult train(const DatasetView& view, const TrainConfig& config,
                  const TrainHooks& hooks = {});

// One row per epoch: epoch,loss_image,loss_text,loss_total,tau,
// trainable_params,val_recall1.
void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);

}  // namespace fungi
