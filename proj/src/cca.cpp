#include "emobench/cca.hpp"

#include <algorithm>
#include <cmath>

namespace emobench {

namespace {

// Symmetric inverse square root via eigendecomposition. Throws RankDeficient
// when eigenvalues stay non-positive despite the ridge.
Matrix inverse_sqrt(const Matrix& cov, const char* which) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::RankDeficient,
                std::string(which) + " covariance eigendecomposition failed");
  }
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double max_ev = values.maxCoeff();
  if (!(max_ev > 0.0)) {
    throw Error(ErrorCode::RankDeficient,
                std::string(which) + " covariance has no positive eigenvalues");
  }
  Eigen::VectorXd inv_sqrt(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) <= max_ev * 1e-14) {
      throw Error(ErrorCode::RankDeficient,
                  std::string(which) +
                      " covariance is rank deficient despite the ridge (eigenvalue " +
                      std::to_string(values(i)) + ")");
    }
    inv_sqrt(i) = 1.0 / std::sqrt(values(i));
  }
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

CcaResult cca_fuse(const Matrix& x, const Matrix& y, int k, double ridge_rel) {
  const Eigen::Index n = x.rows();
  const Eigen::Index dim_x = x.cols();
  const Eigen::Index dim_y = y.cols();
  if (y.rows() != n) {
    throw Error(ErrorCode::LengthMismatch,
                "views disagree on sample count: " + std::to_string(n) + " vs " +
                    std::to_string(y.rows()));
  }
  if (n <= std::max(dim_x, dim_y)) {
    throw Error(ErrorCode::RankDeficient,
                "need more samples (" + std::to_string(n) + ") than the larger view dim (" +
                    std::to_string(std::max(dim_x, dim_y)) + ")");
  }
  if (k < 1 || k > std::min(dim_x, dim_y)) {
    throw Error(ErrorCode::InvalidConfig,
                "k=" + std::to_string(k) + " out of range for dims (" +
                    std::to_string(dim_x) + ", " + std::to_string(dim_y) + ")");
  }

  CcaResult result;
  result.mean_x = x.colwise().mean();
  result.mean_y = y.colwise().mean();
  const Matrix xc = x.rowwise() - result.mean_x.transpose();
  const Matrix yc = y.rowwise() - result.mean_y.transpose();

  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix sxx = xc.transpose() * xc * inv_n;
  Matrix syy = yc.transpose() * yc * inv_n;
  const Matrix sxy = xc.transpose() * yc * inv_n;

  sxx.diagonal().array() += ridge_rel * sxx.trace() / static_cast<double>(dim_x);
  syy.diagonal().array() += ridge_rel * syy.trace() / static_cast<double>(dim_y);

  const Matrix wx = inverse_sqrt(sxx, "x-view");
  const Matrix wy = inverse_sqrt(syy, "y-view");

  const Matrix m = wx * sxy * wy;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);

  result.proj_x = wx * svd.matrixU().leftCols(k);
  result.proj_y = wy * svd.matrixV().leftCols(k);
  result.correlations.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    result.correlations[static_cast<std::size_t>(i)] =
        std::clamp(svd.singularValues()(i), 0.0, 1.0);
  }
  return result;
}

Matrix cca_project(const CcaResult& cca, const Matrix& x, const Matrix& y) {
  const Matrix xc = x.rowwise() - cca.mean_x.transpose();
  const Matrix yc = y.rowwise() - cca.mean_y.transpose();
  Matrix fused(x.rows(), cca.proj_x.cols() + cca.proj_y.cols());
  fused << xc * cca.proj_x, yc * cca.proj_y;
  return fused;
}

}  // namespace emobench
