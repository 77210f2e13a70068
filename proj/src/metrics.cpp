#include "emobench/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace emobench {

ConfusionResult confusion_metrics(const std::vector<int>& predictions,
                                  const std::vector<int>& labels, int n_classes) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) {
    throw Error(ErrorCode::EmptyInput, "no predictions to score");
  }
  if (n_classes < 1) {
    throw Error(ErrorCode::InvalidConfig, "n_classes must be positive");
  }

  ConfusionResult result;
  result.confusion = Matrix::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i];
    const int p = predictions[i];
    if (t < 0 || t >= n_classes) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(t) + " at index " + std::to_string(i));
    }
    if (p < 0 || p >= n_classes) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "prediction " + std::to_string(p) + " at index " + std::to_string(i));
    }
    result.confusion(t, p) += 1.0;
  }

  const double total = static_cast<double>(labels.size());
  result.metrics.accuracy = result.confusion.trace() / total;

  double f1_sum = 0.0;
  int f1_classes = 0;
  for (int c = 0; c < n_classes; ++c) {
    const double tp = result.confusion(c, c);
    const double support = result.confusion.row(c).sum();
    const double predicted = result.confusion.col(c).sum();
    if (support == 0.0 && predicted == 0.0) continue;  // dropped from the mean
    ++f1_classes;
    if (tp == 0.0) continue;  // P or R is zero -> F1 contribution 0
    const double precision = tp / predicted;
    const double recall = tp / support;
    f1_sum += 2.0 * precision * recall / (precision + recall);
  }
  result.metrics.macro_f1 = f1_classes > 0 ? f1_sum / f1_classes : 0.0;
  return result;
}

MeanStd aggregate(const std::vector<double>& values) {
  if (values.empty()) {
    throw Error(ErrorCode::EmptyInput, "cannot aggregate zero units");
  }
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  out.stdev = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

std::map<std::string, double> rank_scores(
    const std::map<std::string, std::vector<double>>& method_metrics,
    bool higher_is_better, std::vector<std::string>* excluded_log) {
  // Keep only methods with a complete, finite metric row of the modal length.
  std::size_t n_metrics = 0;
  for (const auto& [method, values] : method_metrics) {
    n_metrics = std::max(n_metrics, values.size());
  }

  std::vector<std::string> methods;
  for (const auto& [method, values] : method_metrics) {
    bool complete = values.size() == n_metrics;
    for (double v : values) {
      if (!std::isfinite(v)) complete = false;
    }
    if (complete) {
      methods.push_back(method);
    } else if (excluded_log != nullptr) {
      excluded_log->push_back(method + ": incomplete metrics, excluded from ranking");
    }
  }

  std::map<std::string, double> scores;
  if (methods.empty()) return scores;
  for (const std::string& m : methods) scores[m] = 0.0;

  const int n = static_cast<int>(methods.size());
  for (std::size_t metric = 0; metric < n_metrics; ++metric) {
    std::vector<std::pair<double, std::string>> column;
    column.reserve(methods.size());
    for (const std::string& m : methods) {
      column.emplace_back(method_metrics.at(m)[metric], m);
    }
    std::sort(column.begin(), column.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return higher_is_better ? a.first > b.first : a.first < b.first;
      return a.second < b.second;
    });

    // Best position gets n points, worst gets 1; ties share the mean of the
    // points they span.
    std::size_t i = 0;
    while (i < column.size()) {
      std::size_t j = i;
      while (j + 1 < column.size() && column[j + 1].first == column[i].first) ++j;
      double points = 0.0;
      for (std::size_t k = i; k <= j; ++k) points += static_cast<double>(n) - static_cast<double>(k);
      points /= static_cast<double>(j - i + 1);
      for (std::size_t k = i; k <= j; ++k) scores[column[k].second] += points;
      i = j + 1;
    }
  }
  return scores;
}

}  // namespace emobench
