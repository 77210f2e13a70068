#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emobench/metrics.hpp"
#include "emobench/split.hpp"

namespace emobench {

// One evaluated unit: a (subject, session) group for subject-dependent runs,
// a whole fold for subject-independent ones.
struct UnitMetric {
  std::string unit;
  std::uint64_t seed = 0;
  MetricPair metrics;  // fractions in [0, 1]
};

struct MethodResult {
  std::string method;
  std::vector<UnitMetric> units;
};

struct EvalReport {
  std::string dataset;
  Task task = Task::SubjectDependent;
  std::string aggregation_unit;  // "subject_session" | "fold" (Table metadata)
  std::vector<MethodResult> methods;
};

enum class ReportFormat { Csv, Markdown, Both };

// Pooled mean/std per metric in percent, as reported.
struct MethodSummary {
  std::string method;
  MeanStd accuracy_pct;
  MeanStd macro_f1_pct;
  int n_units = 0;
};

std::vector<MethodSummary> summarize(const EvalReport& report);

// Rank-sum scores over the pooled accuracy and macro-F1 columns.
std::map<std::string, double> report_rank_scores(const EvalReport& report);

// Emits report.csv / units.csv / ranks.csv and/or report.md into out_dir.
// Cells show percent values as "mean (std)" with two decimals; the best value
// per column is bold, the second best underlined. Byte-deterministic.
// Returns the emitted paths. Throws EmptyInput, IoFailure.
std::vector<std::filesystem::path> emit_report(const EvalReport& report,
                                               const std::filesystem::path& out_dir,
                                               ReportFormat format = ReportFormat::Both);

}  // namespace emobench
