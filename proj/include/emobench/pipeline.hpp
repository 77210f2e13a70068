#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emobench/adapter.hpp"
#include "emobench/manifest.hpp"
#include "emobench/models.hpp"
#include "emobench/preprocess.hpp"
#include "emobench/report.hpp"
#include "emobench/split.hpp"

namespace emobench {

inline constexpr const char* kEngineVersion = "0.1.0";

// FNV-1a, used for content-addressed preprocessing caching and config hashes.
std::uint64_t fnv1a64(const std::string& bytes);

struct ModelSpec {
  std::string id;    // "linear" | "mlp" | "adapter"
  std::string name;  // report label; defaults to id
  TrainConfig train;
  AdapterConfig adapter;
};

struct RunConfig {
  std::filesystem::path dataset_manifest;
  std::filesystem::path output_dir = "out";
  std::filesystem::path cache_dir;  // empty -> output_dir / "cache"
  Task task = Task::SubjectDependent;
  SplitRatio ratio;
  bool stratify = true;
  PreprocConfig preproc;
  std::string fusion = "concat";  // "concat" | "cca"
  int cca_components = 4;
  double cca_ridge = 1e-4;
  std::vector<ModelSpec> models;
  std::vector<std::uint64_t> seeds = {1};
  int workers = 1;
  ReportFormat format = ReportFormat::Both;

  std::filesystem::path resolved_cache_dir() const {
    return cache_dir.empty() ? output_dir / "cache" : cache_dir;
  }
};

// Parses and validates the JSON run configuration; relative paths resolve
// against the config file's directory. Throws InvalidConfig before any
// computation happens.
RunConfig load_run_config(const std::filesystem::path& config_path);

// Canonical JSON echo of the configuration (sorted keys); its hash goes in the
// run manifest.
std::string normalized_config_json(const RunConfig& config);

// --- Stages -------------------------------------------------------------------
// run_benchmark is literally the composition of these, so chaining the CLI
// subcommands reproduces its outputs byte for byte.

struct PreprocessStats {
  int computed = 0;
  int cache_hits = 0;
};

// Each (trial, modality) tensor is cached under a content hash of the raw
// bytes plus the preprocessing configuration; hits are loaded, misses
// computed, written, and re-loaded so both paths serve identical
// float32-rounded values.
FeatureStore preprocess_stage(const RunConfig& config, const DatasetDescriptor& descriptor,
                              PreprocessStats* stats = nullptr);

std::vector<TrialKey> trial_keys(const DatasetDescriptor& descriptor);

SplitPlan split_stage(const RunConfig& config, const DatasetDescriptor& descriptor,
                      std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

// One scored unit of one method under one seed, with everything eval needs
// plus the per-epoch training log for audits.
struct UnitPrediction {
  std::string method;
  std::uint64_t seed = 0;
  std::string unit;
  int selected_epoch = -1;
  std::vector<int> predicted;
  std::vector<int> labels;
  std::vector<EpochRecord> epochs;
};

std::vector<UnitPrediction> train_stage(const RunConfig& config,
                                        const DatasetDescriptor& descriptor,
                                        const FeatureStore& store, const SplitPlan& plan,
                                        std::uint64_t seed);

EvalReport eval_stage(const RunConfig& config, const DatasetDescriptor& descriptor,
                      const std::vector<UnitPrediction>& predictions);

// Persisted intermediates for stage-level debugging.
void save_predictions(const std::filesystem::path& path, const RunConfig& config,
                      const DatasetDescriptor& descriptor,
                      const std::vector<UnitPrediction>& predictions);
std::vector<UnitPrediction> load_predictions(const std::filesystem::path& path);
void save_metrics(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_metrics(const std::filesystem::path& path);
// Per-epoch validation logs and selected checkpoints, one record per
// (method, seed, unit). Audit artifact; nothing downstream consumes it.
void save_model_runs(const std::filesystem::path& path,
                     const std::vector<UnitPrediction>& predictions);

// Full pipeline: ingest -> preprocess (cached) -> split -> train/select ->
// evaluate -> report, plus the run manifest (config hash, engine version,
// seeds). Returns the emitted report paths.
std::vector<std::filesystem::path> run_benchmark(const RunConfig& config);

}  // namespace emobench
