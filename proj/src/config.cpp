#include "fungi/config.hpp"

#include "fungi/error.hpp"
#include "fungi/json_util.hpp"
#include "fungi/util.hpp"

namespace fungi {

using nlohmann::json;

void PipelineConfig::propagate() {
  dataset.master_seed = seed;
  dataset.out_dir = out_dir;
  dataset.threads = threads;
  train.seed = seed;
}

void PipelineConfig::validate() const {
  if (caption_provider != "template" && caption_provider != "remote")
    throw ConfigError("provider must be 'template' or 'remote'");
  if (threads < 1) throw ConfigError("threads must be positive");
  dataset.validate();
  train.validate();
  if (caption_provider == "remote") endpoint.validate();
}

json PipelineConfig::to_json() const {
  return json{
      {"seed", seed},
      {"out", out_dir},
      {"threads", threads},
      {"provider", caption_provider},
      {"dataset", dataset_config_to_json(dataset)},
      {"endpoint",
       json{{"base_url", endpoint.base_url},
            {"path", endpoint.path},
            {"model", endpoint.model},
            {"api_key_env", endpoint.api_key_env},
            {"max_attempts", endpoint.max_attempts},
            {"backoff_ms", endpoint.backoff_ms},
            {"max_inflight", endpoint.max_inflight},
            {"timeout_s", endpoint.timeout_s}}},
      {"train",
       json{{"epochs", train.epochs},
            {"batch_size", train.batch_size},
            {"learning_rate", train.learning_rate},
            {"weight_decay", train.weight_decay},
            {"beta1", train.beta1},
            {"beta2", train.beta2},
            {"eps", train.eps},
            {"unfreeze_interval", train.unfreeze_interval},
            {"encoder",
             json{{"patch", train.dims.patch},
                  {"hidden", train.dims.hidden},
                  {"text_hidden", train.dims.text_hidden},
                  {"out", train.dims.out}}}}},
      {"eval",
       json{{"split", split_name(eval.split)},
            {"prototype_mode", prototype_mode_name(eval.prototype_mode)}}},
  };
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  jsonu::check_keys(j, "config",
                    {"seed", "out", "threads", "provider", "dataset", "endpoint", "train", "eval"});
  c.seed = jsonu::get_or(j, "seed", c.seed, "config");
  c.out_dir = jsonu::get_or(j, "out", c.out_dir, "config");
  c.threads = jsonu::get_or(j, "threads", c.threads, "config");
  c.caption_provider = jsonu::get_or(j, "provider", c.caption_provider, "config");
  if (j.contains("dataset")) c.dataset = dataset_config_from_json(j.at("dataset"));
  if (j.contains("endpoint")) {
    const auto& e = j.at("endpoint");
    jsonu::check_keys(e, "endpoint",
                      {"base_url", "path", "model", "api_key_env", "max_attempts", "backoff_ms",
                       "max_inflight", "timeout_s"});
    c.endpoint.base_url = jsonu::get_or(e, "base_url", c.endpoint.base_url, "endpoint");
    c.endpoint.path = jsonu::get_or(e, "path", c.endpoint.path, "endpoint");
    c.endpoint.model = jsonu::get_or(e, "model", c.endpoint.model, "endpoint");
    c.endpoint.api_key_env = jsonu::get_or(e, "api_key_env", c.endpoint.api_key_env, "endpoint");
    c.endpoint.max_attempts = jsonu::get_or(e, "max_attempts", c.endpoint.max_attempts, "endpoint");
    c.endpoint.backoff_ms = jsonu::get_or(e, "backoff_ms", c.endpoint.backoff_ms, "endpoint");
    c.endpoint.max_inflight = jsonu::get_or(e, "max_inflight", c.endpoint.max_inflight, "endpoint");
    c.endpoint.timeout_s = jsonu::get_or(e, "timeout_s", c.endpoint.timeout_s, "endpoint");
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    jsonu::check_keys(t, "train",
                      {"epochs", "batch_size", "learning_rate", "weight_decay", "beta1", "beta2",
                       "eps", "unfreeze_interval", "encoder"});
    c.train.epochs = jsonu::get_or(t, "epochs", c.train.epochs, "train");
    c.train.batch_size = jsonu::get_or(t, "batch_size", c.train.batch_size, "train");
    c.train.learning_rate = jsonu::get_or(t, "learning_rate", c.train.learning_rate, "train");
    c.train.weight_decay = jsonu::get_or(t, "weight_decay", c.train.weight_decay, "train");
    c.train.beta1 = jsonu::get_or(t, "beta1", c.train.beta1, "train");
    c.train.beta2 = jsonu::get_or(t, "beta2", c.train.beta2, "train");
    c.train.eps = jsonu::get_or(t, "eps", c.train.eps, "train");
    c.train.unfreeze_interval =
        jsonu::get_or(t, "unfreeze_interval", c.train.unfreeze_interval, "train");
    if (t.contains("encoder")) {
      const auto& enc = t.at("encoder");
      jsonu::check_keys(enc, "train.encoder", {"patch", "hidden", "text_hidden", "out"});
      c.train.dims.patch = jsonu::get_or(enc, "patch", c.train.dims.patch, "train.encoder");
      c.train.dims.hidden = jsonu::get_or(enc, "hidden", c.train.dims.hidden, "train.encoder");
      c.train.dims.text_hidden =
          jsonu::get_or(enc, "text_hidden", c.train.dims.text_hidden, "train.encoder");
      c.train.dims.out = jsonu::get_or(enc, "out", c.train.dims.out, "train.encoder");
    }
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    jsonu::check_keys(e, "eval", {"split", "prototype_mode"});
    c.eval.split = split_from_name(jsonu::get_or<std::string>(e, "split", "val", "eval"));
    c.eval.prototype_mode =
        prototype_mode_from_name(jsonu::get_or<std::string>(e, "prototype_mode", "mean", "eval"));
  }
  c.propagate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

void PipelineConfig::save(const std::string& path) const {
  write_file(path, to_json().dump(2) + "\n");
}

std::uint64_t PipelineConfig::config_hash() const {
  return fnv1a64(dataset_config_to_json(dataset).dump());
}

std::uint64_t manifest_config_hash(const DatasetManifest& manifest) {
  return fnv1a64(manifest.config_snapshot.dump());
}

}  // namespace fungi
