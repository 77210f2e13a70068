#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emobench/models.hpp"
#include "emobench/split.hpp"

namespace emobench {

inline constexpr int kAdapterProtocolVersion = 1;

struct AdapterConfig {
  std::string command;            // run via /bin/sh -c
  double timeout_seconds = 30.0;  // per awaited reply
};

// Exchange files, all in the engine's container format. Test labels are
// deliberately absent: the engine computes test metrics itself.
struct AdapterPaths {
  std::filesystem::path train_features;
  std::filesystem::path train_labels;
  std::filesystem::path val_features;
  std::filesystem::path val_labels;
  std::filesystem::path test_features;
};

// Every line exchanged with the child, for audits and the label-leakage test.
struct WireCapture {
  std::vector<std::string> sent;
  std::vector<std::string> received;
};

struct AdapterRunResult {
  ModelRun run;
  std::vector<int> predictions;  // one per test sample
};

// Drives the documented protocol (docs/adapter_protocol.md) end to end.
// Throws ProtocolViolation, Timeout, NonZeroExit; each carries the child's
// stderr tail.
AdapterRunResult adapter_run(const AdapterConfig& config, Task task, int n_classes,
                             int feature_dim, std::uint64_t seed, const AdapterPaths& paths,
                             int expected_predictions, WireCapture* capture = nullptr);

}  // namespace emobench
