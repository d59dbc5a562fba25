#include <fcntl.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fungi/chat_client.hpp"
#include "fungi/config.hpp"
#include "fungi/dataset.hpp"
#include "fungi/encoder.hpp"
#include "fungi/error.hpp"
#include "fungi/train.hpp"
#include "fungi/util.hpp"
#include "fungi/zeroshot.hpp"

namespace fs = std::filesystem;
using namespace fungi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string g_status_path;

// Best-effort, allocation-free: a run killed mid-flight leaves its status
// file marked interrupted instead of silently looking complete.
void handle_sigint(int) {
  if (!g_status_path.empty()) {
    const int fd = ::open(g_status_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      constexpr char body[] = "{\"state\":\"interrupted\"}\n";
      [[maybe_unused]] auto n = ::write(fd, body, sizeof(body) - 1);
      ::close(fd);
    }
  }
  std::_Exit(130);
}

void write_status(const std::string& out_dir, const std::string& state,
                  const std::string& command) {
  const nlohmann::json j{{"state", state}, {"command", command}};
  write_file(out_dir + "/status.json", j.dump() + "\n");
}

void begin_run(const std::string& out_dir, const std::string& command) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
  write_status(out_dir, "running", command);
  g_status_path = out_dir + "/status.json";
  std::signal(SIGINT, handle_sigint);
}

void finish_run(const std::string& out_dir, const std::string& command) {
  write_status(out_dir, "complete", command);
  g_status_path.clear();
}

struct CliOverrides {
  std::string config_path;
  std::string out;
  std::string provider;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int count = 0;
  bool count_set = false;
  int epochs = 0;
  bool epochs_set = false;
  int threads = 0;
  bool threads_set = false;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--out", o.out, "run output directory");
  cmd->add_option("--seed", o.seed, "master seed")->each([&](const std::string&) {
    o.seed_set = true;
  });
  cmd->add_option("--count", o.count, "total image count across all classes")
      ->each([&](const std::string&) { o.count_set = true; });
  cmd->add_option("--epochs", o.epochs, "training epochs")->each([&](const std::string&) {
    o.epochs_set = true;
  });
  cmd->add_option("--threads", o.threads, "worker thread cap")->each([&](const std::string&) {
    o.threads_set = true;
  });
}

PipelineConfig resolve_config(const CliOverrides& o) {
  PipelineConfig cfg =
      o.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(o.config_path);
  if (o.seed_set) cfg.seed = o.seed;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.threads_set) cfg.threads = o.threads;
  if (o.epochs_set) cfg.train.epochs = o.epochs;
  if (!o.provider.empty()) cfg.caption_provider = o.provider;
  if (o.count_set) {
    if (o.count <= 0 || o.count % kNumStages != 0) {
      throw ConfigError("--count must be a positive multiple of " + std::to_string(kNumStages));
    }
    cfg.dataset.per_class_count = o.count / kNumStages;
  }
  cfg.propagate();
  cfg.validate();
  return cfg;
}

void print_split_summary(const DatasetManifest& manifest) {
  const auto counts = manifest.split_counts();
  std::array<int, kNumSplits> totals{};
  std::printf("%-10s %8s %8s %8s\n", "class", "train", "val", "test");
  for (int k = 0; k < kNumStages; ++k) {
    std::printf("%-10s %8d %8d %8d\n", stage_name(static_cast<StageClass>(k)), counts[k][0],
                counts[k][1], counts[k][2]);
    for (int s = 0; s < kNumSplits; ++s) totals[static_cast<std::size_t>(s)] += counts[k][s];
  }
  std::printf("%-10s %8d %8d %8d\n", "total", totals[0], totals[1], totals[2]);
}

int run_generate(const CliOverrides& o) {
  PipelineConfig cfg = resolve_config(o);
  begin_run(cfg.out_dir, "generate");
  cfg.save(cfg.out_dir + "/effective_config.json");
  const DatasetManifest manifest = build_dataset(cfg.dataset);
  print_split_summary(manifest);
  std::printf("manifest %s checksum %s\n", manifest_path(cfg.out_dir).c_str(),
              to_hex(checksum_file(manifest_path(cfg.out_dir))).c_str());
  finish_run(cfg.out_dir, "generate");
  return kExitOk;
}

int run_caption(const CliOverrides& o) {
  PipelineConfig cfg = resolve_config(o);
  std::error_code ec;
  fs::create_directories(fs::path(cfg.out_dir) / "captions", ec);
  if (ec) throw IoError("cannot create captions directory: " + ec.message());

  std::array<CaptionTableEntry, kNumStages> entries;
  for (int k = 0; k < kNumStages; ++k) {
    const auto stage = static_cast<StageClass>(k);
    CaptionSet set;
    if (cfg.caption_provider == "remote") {
      set = fetch_remote_captions(stage, cfg.endpoint, cfg.dataset.captions);
    } else {
      set = generate_set(stage, cfg.dataset.prompt, cfg.dataset.captions,
                         derive_seed(cfg.seed, 9000 + static_cast<std::uint64_t>(k)));
    }
    const std::string rel = std::string("captions/") + stage_name(stage) + ".txt";
    write_caption_file(set, cfg.out_dir + "/" + rel);
    const CaptionStats stats = caption_stats(set);
    std::printf("%-10s captions=%d mean_tokens=%.2f vocabulary=%d provider=%s\n",
                stage_name(stage), stats.count, stats.mean_tokens, stats.vocabulary,
                set.provider.c_str());
    entries[static_cast<std::size_t>(k)] =
        CaptionTableEntry{rel, static_cast<int>(set.captions.size()),
                          to_hex(checksum_file(cfg.out_dir + "/" + rel)), set.provider};
  }

  // Keep an existing manifest consistent with the rewritten caption files.
  const std::string manifest_file = manifest_path(cfg.out_dir);
  if (fs::exists(manifest_file)) {
    DatasetManifest manifest = DatasetManifest::load(manifest_file);
    manifest.captions = entries;
    for (auto& record : manifest.records) {
      const int count = entries[static_cast<std::size_t>(ordinal(record.stage))].count;
      record.caption_ids.resize(static_cast<std::size_t>(count));
      for (int c = 0; c < count; ++c) record.caption_ids[static_cast<std::size_t>(c)] = c;
    }
    manifest.save(manifest_file);
  }
  return kExitOk;
}

int run_train(const CliOverrides& o) {
  PipelineConfig cfg = resolve_config(o);
  const std::string manifest_file = manifest_path(cfg.out_dir);
  if (!fs::exists(manifest_file))
    throw ConfigError("missing manifest " + manifest_file + "; run `generate` first");
  const DatasetView view = DatasetView::open(manifest_file);

  begin_run(cfg.out_dir, "train");
  cfg.save(cfg.out_dir + "/effective_config.json");
  const TrainResult result = train(view, cfg.train);
  write_metrics_csv(result.metrics, cfg.out_dir + "/metrics.csv");
  const std::string checkpoint = cfg.out_dir + "/checkpoint.bin";
  save_checkpoint(result.params, checkpoint, manifest_config_hash(view.manifest()));
  if (result.diverged) {
    throw Error("training diverged after epoch " + std::to_string(result.completed_epochs) +
                "; last good checkpoint at " + checkpoint);
  }
  const double recall = result.metrics.empty() ? 0.0 : result.metrics.back().val_recall1;
  std::printf("trained %d epochs, final val recall@1 %.4f, checkpoint %s\n",
              result.completed_epochs, recall, checkpoint.c_str());
  finish_run(cfg.out_dir, "train");
  return kExitOk;
}

int run_eval(const CliOverrides& o, const std::string& checkpoint_flag,
             const std::string& split_flag) {
  PipelineConfig cfg = resolve_config(o);
  if (!split_flag.empty()) cfg.eval.split = split_from_name(split_flag);
  const std::string manifest_file = manifest_path(cfg.out_dir);
  if (!fs::exists(manifest_file))
    throw ConfigError("missing manifest " + manifest_file + "; run `generate` first");
  const DatasetView view = DatasetView::open(manifest_file);

  const std::string checkpoint =
      checkpoint_flag.empty() ? cfg.out_dir + "/checkpoint.bin" : checkpoint_flag;
  if (!fs::exists(checkpoint)) throw ConfigError("missing checkpoint " + checkpoint);
  std::uint64_t trained_hash = 0;
  const EncoderPair pair = load_checkpoint(checkpoint, &trained_hash);
  if (trained_hash != manifest_config_hash(view.manifest())) {
    throw Error("checkpoint " + checkpoint + " was trained on a different dataset config");
  }

  const ClassPrototypeSet prototypes =
      build_prototypes(pair, view.caption_sets(), cfg.eval.prototype_mode);
  const EvalReport report = evaluate(view, cfg.eval.split, pair, prototypes);
  const std::string report_dir =
      cfg.out_dir + "/eval_" + split_name(cfg.eval.split);
  write_report(report, report_dir);

  std::printf("recall@1 %.4f on %s (%d samples, %d misclassified)\n", report.recall_at_1,
              split_name(cfg.eval.split), report.total(), report.misclassified());
  std::printf("confusion (rows truth, cols predicted):\n");
  for (int t = 0; t < kNumStages; ++t) {
    std::printf("%-10s", stage_name(static_cast<StageClass>(t)));
    for (int p = 0; p < kNumStages; ++p) std::printf(" %6d", report.confusion(t, p));
    std::printf("\n");
  }
  std::printf("report %s\n", (report_dir + "/report.json").c_str());
  return kExitOk;
}

int run_pipeline(const CliOverrides& o, const std::string& checkpoint_flag,
                 const std::string& split_flag) {
  int code = run_generate(o);
  if (code != kExitOk) return code;
  code = run_caption(o);
  if (code != kExitOk) return code;
  code = run_train(o);
  if (code != kExitOk) return code;
  return run_eval(o, checkpoint_flag, split_flag);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic fungal growth-stage dataset, dual-encoder training and zero-shot eval"};
  app.require_subcommand(1);

  CliOverrides gen_o, cap_o, train_o, eval_o, pipe_o;
  std::string eval_checkpoint, eval_split, pipe_checkpoint, pipe_split;

  auto* gen = app.add_subcommand("generate", "build the image dataset and manifest");
  add_common_options(gen, gen_o);

  auto* cap = app.add_subcommand("caption", "write per-class caption files");
  add_common_options(cap, cap_o);
  cap->add_option("--provider", cap_o.provider, "caption provider: template or remote");

  auto* tr = app.add_subcommand("train", "train the dual encoder on a built dataset");
  add_common_options(tr, train_o);

  auto* ev = app.add_subcommand("eval", "zero-shot evaluation of a checkpoint");
  add_common_options(ev, eval_o);
  ev->add_option("--checkpoint", eval_checkpoint, "checkpoint file (default: <out>/checkpoint.bin)");
  ev->add_option("--split", eval_split, "split to evaluate: train, val or test");

  auto* pipe = app.add_subcommand("pipeline", "generate, caption, train and eval in one run");
  add_common_options(pipe, pipe_o);
  pipe->add_option("--provider", pipe_o.provider, "caption provider: template or remote");
  pipe->add_option("--split", pipe_split, "split to evaluate at the end");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return run_generate(gen_o);
    if (cap->parsed()) return run_caption(cap_o);
    if (tr->parsed()) return run_train(train_o);
    if (ev->parsed()) return run_eval(eval_o, eval_checkpoint, eval_split);
    if (pipe->parsed()) return run_pipeline(pipe_o, pipe_checkpoint, pipe_split);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
