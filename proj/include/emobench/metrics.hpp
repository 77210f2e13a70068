#pragma once

#include <map>
#include <string>
#include <vector>

#include "emobench/types.hpp"

namespace emobench {

struct MetricPair {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct ConfusionResult {
  MetricPair metrics;
  Matrix confusion;  // n_classes x n_classes, rows = true labels
};

// accuracy = trace/total. Macro-F1 averages per-class F1 = 2PR/(P+R); a class
// absent from both labels and predictions is dropped from the mean, a class
// with zero support but some predictions (or support but no predictions)
// contributes 0. Throws LengthMismatch, LabelOutOfRange, EmptyInput.
ConfusionResult confusion_metrics(const std::vector<int>& predictions,
                                  const std::vector<int>& labels, int n_classes);

struct MeanStd {
  double mean = 0.0;
  double stdev = 0.0;  // population (n denominator)
};

// Throws EmptyInput.
MeanStd aggregate(const std::vector<double>& values);

// Rank-sum scoring: per metric the best value gets n points down to 1, ties
// share the mean of their spanned ranks, and a method's final score sums its
// points over all metrics. Methods missing any metric (NaN) are excluded and
// reported through excluded_log.
std::map<std::string, double> rank_scores(
    const std::map<std::string, std::vector<double>>& method_metrics,
    bool higher_is_better = true, std::vector<std::string>* excluded_log = nullptr);

}  // namespace emobench
