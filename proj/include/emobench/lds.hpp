#pragma once

#include <vector>

#include "emobench/preprocess.hpp"
#include "emobench/types.hpp"

namespace emobench {

// Linear-dynamic-system smoothing of a feature trajectory: forward Kalman
// filter plus backward RTS pass under the local-level model
//   x_t = x_{t-1} + w,  w ~ N(0, Q)
//   y_t = x_t + v,      v ~ N(0, R)
// with R = var(diff(y)) / 2 and Q = process_var_ratio * R. Sequences shorter
// than 2 (and constant sequences) are returned unchanged.
std::vector<double> lds_smooth(const std::vector<double>& series, const LdsConfig& config);

// Applies lds_smooth independently to every column (feature dimension).
void lds_smooth_columns(Matrix& values, const LdsConfig& config);

}  // namespace emobench
