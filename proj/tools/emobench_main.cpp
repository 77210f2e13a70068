#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "emobench/manifest.hpp"
#include "emobench/pipeline.hpp"
#include "emobench/synth.hpp"

namespace {

using namespace emobench;

// Exit codes: 0 ok, 1 validation error, 2 runtime error.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::MissingFile:
    case ErrorCode::ChannelCountMismatch:
    case ErrorCode::UnknownLabel:
    case ErrorCode::DuplicateTrialId:
    case ErrorCode::EmptySession:
    case ErrorCode::MissingModality:
      return true;
    default:
      return false;
  }
}

struct CommonFlags {
  std::string config_path;
  int workers = 0;             // 0 = keep config value
  std::string cache_dir;       // overrides config
  std::string format;          // csv | md | both
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
};

RunConfig load_config_with_flags(const CommonFlags& flags) {
  RunConfig config = load_run_config(flags.config_path);
  if (flags.workers > 0) config.workers = flags.workers;
  if (!flags.cache_dir.empty()) {
    config.cache_dir = flags.cache_dir;
  } else if (const char* env = std::getenv("EMOBENCH_CACHE_DIR"); env != nullptr && *env) {
    config.cache_dir = std::filesystem::path(env);
  }
  if (!flags.format.empty()) {
    if (flags.format == "csv") {
      config.format = ReportFormat::Csv;
    } else if (flags.format == "md") {
      config.format = ReportFormat::Markdown;
    } else if (flags.format == "both") {
      config.format = ReportFormat::Both;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown --format '" + flags.format + "'");
    }
  }
  if (flags.has_seed_override) config.seeds = {flags.seed_override};
  return config;
}

DatasetDescriptor validated_descriptor(const RunConfig& config) {
  const ValidationResult v = validate_manifest(config.dataset_manifest);
  if (!v.ok()) {
    std::string message = "dataset manifest is invalid:";
    for (const ValidationIssue& issue : v.issues) {
      message += "\n  [" + std::string(error_code_name(issue.code)) + "] " + issue.message;
    }
    throw Error(ErrorCode::InvalidConfig, message);
  }
  for (const std::string& note : v.descriptor.notes) std::cerr << "note: " << note << "\n";
  return v.descriptor;
}

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration JSON")->required();
  cmd->add_option("--workers", flags.workers, "worker threads for preprocessing");
  cmd->add_option("--cache-dir", flags.cache_dir,
                  "preprocessing cache directory (or EMOBENCH_CACHE_DIR)");
  cmd->add_option("--format", flags.format, "report format: csv | md | both");
  cmd->add_option("--seed-override", flags.seed_override, "replace the config seed list")
      ->each([&](const std::string&) { flags.has_seed_override = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG multimodal emotion recognition benchmark engine"};
  app.require_subcommand(1);

  // --- synth ---
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  SynthSpec spec;
  std::string synth_out = "synth_data";
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--subjects", spec.n_subjects);
  synth_cmd->add_option("--sessions", spec.n_sessions);
  synth_cmd->add_option("--trials", spec.n_trials);
  synth_cmd->add_option("--classes", spec.classes);
  synth_cmd->add_option("--eeg-channels", spec.eeg_channels);
  synth_cmd->add_option("--aux-channels", spec.aux_channels);
  synth_cmd->add_option("--rate", spec.sample_rate_hz);
  synth_cmd->add_option("--seconds", spec.trial_seconds);
  synth_cmd->add_option("--class-separation", spec.class_separation);
  synth_cmd->add_option("--subject-shift", spec.subject_shift);
  synth_cmd->add_option("--seed", spec.seed);

  // --- validate ---
  auto* validate_cmd = app.add_subcommand("validate", "validate a dataset manifest");
  std::string manifest_path;
  validate_cmd->add_option("--manifest", manifest_path, "manifest JSON")->required();

  // --- staged subcommands + run ---
  CommonFlags preprocess_flags, split_flags, train_flags, eval_flags, run_flags;
  auto* preprocess_cmd =
      app.add_subcommand("preprocess", "populate the feature cache for a config");
  add_common_flags(preprocess_cmd, preprocess_flags);

  auto* split_cmd = app.add_subcommand("split", "write split plan files for a config");
  add_common_flags(split_cmd, split_flags);

  auto* train_cmd =
      app.add_subcommand("train", "train models and write predictions.json");
  add_common_flags(train_cmd, train_flags);

  auto* eval_cmd =
      app.add_subcommand("eval", "score saved predictions into metrics.json");
  add_common_flags(eval_cmd, eval_flags);
  std::string eval_predictions;
  eval_cmd->add_option("--predictions", eval_predictions,
                       "predictions file (default <output_dir>/predictions.json)");

  auto* report_cmd = app.add_subcommand("report", "emit report files from metrics.json");
  CommonFlags report_flags;
  add_common_flags(report_cmd, report_flags);
  std::string report_metrics;
  report_cmd->add_option("--metrics", report_metrics,
                         "metrics file (default <output_dir>/metrics.json)");

  auto* run_cmd = app.add_subcommand("run", "full pipeline: preprocess, split, train, "
                                            "evaluate, report");
  add_common_flags(run_cmd, run_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) {
      const DatasetDescriptor desc = generate_synthetic(spec, synth_out);
      std::cout << (std::filesystem::path(synth_out) / "manifest.json").string() << "\n";
      std::cerr << "generated " << desc.trials.size() << " trials for "
                << desc.subjects.size() << " subjects\n";
      return kExitOk;
    }

    if (validate_cmd->parsed()) {
      const ValidationResult v = validate_manifest(manifest_path);
      for (const ValidationIssue& issue : v.issues) {
        std::cout << "[" << error_code_name(issue.code) << "] " << issue.message << "\n";
      }
      for (const std::string& note : v.descriptor.notes) std::cerr << "note: " << note << "\n";
      if (!v.ok()) return kExitValidation;
      std::cerr << "manifest ok: " << v.descriptor.trials.size() << " trials, "
                << v.descriptor.subjects.size() << " subjects\n";
      return kExitOk;
    }

    if (preprocess_cmd->parsed()) {
      const RunConfig config = load_config_with_flags(preprocess_flags);
      const DatasetDescriptor desc = validated_descriptor(config);
      PreprocessStats stats;
      preprocess_stage(config, desc, &stats);
      std::cerr << "preprocess: " << stats.computed << " computed, " << stats.cache_hits
                << " cache hits\n";
      return kExitOk;
    }

    if (split_cmd->parsed()) {
      const RunConfig config = load_config_with_flags(split_flags);
      const DatasetDescriptor desc = validated_descriptor(config);
      for (std::uint64_t seed : config.seeds) {
        std::vector<std::string> warnings;
        const SplitPlan plan = split_stage(config, desc, seed, &warnings);
        for (const std::string& w : warnings) std::cerr << "note: " << w << "\n";
        const std::filesystem::path path =
            config.output_dir / ("plan_" + std::string(task_name(config.task)) + "_seed" +
                                 std::to_string(seed) + ".txt");
        std::filesystem::create_directories(config.output_dir);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << serialize_plan(plan);
        std::cout << path.string() << "\n";
      }
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      const RunConfig config = load_config_with_flags(train_flags);
      const DatasetDescriptor desc = validated_descriptor(config);
      const FeatureStore store = preprocess_stage(config, desc);
      std::vector<UnitPrediction> predictions;
      for (std::uint64_t seed : config.seeds) {
        const SplitPlan plan = split_stage(config, desc, seed);
        std::filesystem::create_directories(config.output_dir);
        std::ofstream f(config.output_dir /
                        ("plan_" + std::string(task_name(config.task)) + "_seed" +
                         std::to_string(seed) + ".txt"),
                        std::ios::binary | std::ios::trunc);
        f << serialize_plan(plan);
        auto seed_predictions = train_stage(config, desc, store, plan, seed);
        predictions.insert(predictions.end(), seed_predictions.begin(),
                           seed_predictions.end());
      }
      save_predictions(config.output_dir / "predictions.json", config, desc, predictions);
      save_model_runs(config.output_dir / "model_runs.json", predictions);
      std::cout << (config.output_dir / "predictions.json").string() << "\n";
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const RunConfig config = load_config_with_flags(eval_flags);
      const DatasetDescriptor desc = validated_descriptor(config);
      const std::filesystem::path pred_path =
          eval_predictions.empty() ? config.output_dir / "predictions.json"
                                   : std::filesystem::path(eval_predictions);
      const EvalReport report = eval_stage(config, desc, load_predictions(pred_path));
      save_metrics(config.output_dir / "metrics.json", report);
      std::cout << (config.output_dir / "metrics.json").string() << "\n";
      return kExitOk;
    }

    if (report_cmd->parsed()) {
      const RunConfig config = load_config_with_flags(report_flags);
      const std::filesystem::path metrics_path =
          report_metrics.empty() ? config.output_dir / "metrics.json"
                                 : std::filesystem::path(report_metrics);
      const EvalReport report = load_metrics(metrics_path);
      for (const auto& path : emit_report(report, config.output_dir, config.format)) {
        std::cout << path.string() << "\n";
      }
      return kExitOk;
    }

    if (run_cmd->parsed()) {
      const RunConfig config = load_config_with_flags(run_flags);
      for (const auto& path : run_benchmark(config)) {
        std::cout << path.string() << "\n";
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
