#pragma once

#include <vector>

#include "emobench/types.hpp"

namespace emobench {

// Linear canonical correlation analysis: whitened cross-covariance SVD with
// ridge regularization on the covariance diagonals.
struct CcaResult {
  Matrix proj_x;  // dim_x x k
  Matrix proj_y;  // dim_y x k
  Eigen::VectorXd mean_x;
  Eigen::VectorXd mean_y;
  std::vector<double> correlations;  // descending, clipped to [0, 1]
};

// ridge_rel scales the ridge as ridge_rel * trace(S)/dim per view.
// Requires samples > max(dim_x, dim_y) and 1 <= k <= min(dim_x, dim_y).
// Throws RankDeficient when a view's covariance cannot be whitened even with
// the ridge (reported, never silently inflated).
CcaResult cca_fuse(const Matrix& x, const Matrix& y, int k, double ridge_rel = 1e-4);

// Fused sample: concatenation of both canonical projections, n x 2k.
Matrix cca_project(const CcaResult& cca, const Matrix& x, const Matrix& y);

}  // namespace emobench
