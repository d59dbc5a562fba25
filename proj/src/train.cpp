#include "fungi/train.hpp"

#include <cmath>
#include <cstdio>

#include "fungi/error.hpp"
#include "fungi/gradients.hpp"
#include "fungi/util.hpp"

namespace fungi {

AdamWConfig TrainConfig::adamw() const {
  AdamWConfig cfg;
  cfg.lr = learning_rate;
  cfg.weight_decay = weight_decay;
  cfg.beta1 = beta1;
  cfg.beta2 = beta2;
  cfg.eps = eps;
  return cfg;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (unfreeze_interval < 1) throw ConfigError("unfreeze_interval must be positive");
  adamw().validate();
  dims.validate();
}

namespace {

// Zero-shot Recall@1 of the current parameters on one split, with mean
// prototypes built from the class caption sets.
double split_recall(const DatasetView& view, Split split, const EncoderPair& params,
                    const std::vector<int>& indices,
                    const std::vector<RasterImage>& image_cache) {
  const ClassPrototypeSet prototypes =
      build_prototypes(params, view.caption_sets(), PrototypeMode::Mean);
  int correct = 0;
  for (int record_index : indices) {
    const auto& image = image_cache[static_cast<std::size_t>(record_index)];
    const Classification c = classify_image(image, params, prototypes);
    if (c.predicted == view.records()[static_cast<std::size_t>(record_index)].stage) ++correct;
  }
  (void)split;
  return indices.empty() ? 0.0 : static_cast<double>(correct) / indices.size();
}

}  // namespace

TrainResult train(const DatasetView& view, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  const auto train_indices = view.split_indices(Split::Train);
  const auto val_indices = view.split_indices(Split::Val);
  if (train_indices.empty()) throw DataError("train split is empty");
  if (val_indices.empty()) throw DataError("val split is empty");
  const int effective_batch =
      std::min<int>(config.batch_size, static_cast<int>(train_indices.size()));

  // Vocabulary comes from the training caption files and is frozen here.
  std::vector<std::string> all_captions;
  for (int k = 0; k < kNumStages; ++k) {
    const auto& set = view.captions(static_cast<StageClass>(k));
    all_captions.insert(all_captions.end(), set.begin(), set.end());
  }
  const Vocabulary vocab = Vocabulary::build(all_captions);

  TrainResult result;
  result.params = init_params(config.seed, config.dims, vocab);

  // Images the loop touches, decoded once up front.
  std::vector<RasterImage> image_cache(view.records().size());
  for (int idx : train_indices) image_cache[static_cast<std::size_t>(idx)] = view.load_image(idx);
  for (int idx : val_indices) image_cache[static_cast<std::size_t>(idx)] = view.load_image(idx);

  AdamW optimizer(result.params, config.adamw());
  EncoderPair last_good = result.params;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    result.params.mask = unfreeze_schedule(epoch, config.unfreeze_interval);
    if (hooks.before_epoch) hooks.before_epoch(epoch, result.params);

    Rng epoch_rng(derive_seed(config.seed, 0x9C0000 + static_cast<std::uint64_t>(epoch)));
    const auto batches = epoch_batches(view, Split::Train, effective_batch, epoch_rng);

    double sum_image = 0.0, sum_text = 0.0, sum_total = 0.0;
    bool finite = true;
    for (const auto& items : batches) {
      Batch batch;
      batch.images.reserve(items.size());
      batch.captions.reserve(items.size());
      batch.labels.reserve(items.size());
      for (const auto& item : items) {
        batch.images.push_back(&image_cache[static_cast<std::size_t>(item.record_index)]);
        batch.captions.push_back(
            view.captions(item.stage)[static_cast<std::size_t>(item.caption_id)]);
        batch.labels.push_back(ordinal(item.stage));
      }
      BatchGradients grads;
      try {
        grads = loss_gradients(result.params, batch);
      } catch (const NumericError&) {
        finite = false;
        break;
      }
      if (!std::isfinite(grads.loss.total)) {
        finite = false;
        break;
      }
      sum_image += grads.loss.image;
      sum_text += grads.loss.text;
      sum_total += grads.loss.total;
      optimizer.step(result.params, grads.grads);
    }
    if (!finite) {
      result.params = last_good;
      result.diverged = true;
      break;
    }

    EpochMetrics row;
    row.epoch = epoch;
    const auto batch_count = static_cast<double>(batches.size());
    row.loss_image = sum_image / batch_count;
    row.loss_text = sum_text / batch_count;
    row.loss_total = sum_total / batch_count;
    row.tau = result.params.temperature();
    row.trainable_params = trainable_param_count(result.params);
    row.val_recall1 = split_recall(view, Split::Val, result.params, val_indices, image_cache);
    result.metrics.push_back(row);
    result.completed_epochs = epoch + 1;
    last_good = result.params;
    if (hooks.after_epoch) hooks.after_epoch(epoch, result.params, row);
  }
  return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
  std::string out = "epoch,loss_image,loss_text,loss_total,tau,trainable_params,val_recall1\n";
  char buf[256];
  for (const auto& row : metrics) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%lld,%.17g\n", row.epoch,
                  row.loss_image, row.loss_text, row.loss_total, row.tau,
                  static_cast<long long>(row.trainable_params), row.val_recall1);
    out += buf;
  }
  write_file(path, out);
}

}  // namespace fungi
