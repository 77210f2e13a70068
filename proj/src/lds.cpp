#include "emobench/lds.hpp"

#include <cmath>

namespace emobench {

namespace {

std::vector<double> smooth_once(const std::vector<double>& y, double ratio) {
  const std::size_t n = y.size();

  // Observation variance from first differences. For a slowly varying trend
  // plus white noise, var(diff) ~ 2 * noise variance.
  double mean_d = 0.0;
  for (std::size_t t = 1; t < n; ++t) mean_d += y[t] - y[t - 1];
  mean_d /= static_cast<double>(n - 1);
  double var_d = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    const double d = (y[t] - y[t - 1]) - mean_d;
    var_d += d * d;
  }
  var_d /= static_cast<double>(n - 1);

  const double obs_var = var_d / 2.0;
  if (!(obs_var > 0.0)) return y;  // constant input is already its own smooth
  const double proc_var = ratio * obs_var;

  std::vector<double> x_filt(n), p_filt(n);
  x_filt[0] = y[0];
  p_filt[0] = obs_var;
  for (std::size_t t = 1; t < n; ++t) {
    const double x_pred = x_filt[t - 1];
    const double p_pred = p_filt[t - 1] + proc_var;
    const double gain = p_pred / (p_pred + obs_var);
    x_filt[t] = x_pred + gain * (y[t] - x_pred);
    p_filt[t] = (1.0 - gain) * p_pred;
  }

  std::vector<double> x_smooth(n);
  x_smooth[n - 1] = x_filt[n - 1];
  for (std::size_t t = n - 1; t-- > 0;) {
    const double c = p_filt[t] / (p_filt[t] + proc_var);
    x_smooth[t] = x_filt[t] + c * (x_smooth[t + 1] - x_filt[t]);
  }
  return x_smooth;
}

}  // namespace

std::vector<double> lds_smooth(const std::vector<double>& series, const LdsConfig& config) {
  if (!config.enabled || series.size() < 2) return series;
  std::vector<double> out = series;
  for (int i = 0; i < config.iterations; ++i) {
    out = smooth_once(out, config.process_var_ratio);
  }
  return out;
}

void lds_smooth_columns(Matrix& values, const LdsConfig& config) {
  if (!config.enabled || values.rows() < 2) return;
  std::vector<double> column(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    for (Eigen::Index r = 0; r < values.rows(); ++r) column[static_cast<std::size_t>(r)] = values(r, c);
    const std::vector<double> smoothed = lds_smooth(column, config);
    for (Eigen::Index r = 0; r < values.rows(); ++r) values(r, c) = smoothed[static_cast<std::size_t>(r)];
  }
}

}  // namespace emobench
