#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "emobench/cca.hpp"
#include "test_util.hpp"

using namespace emobench;

namespace {

// Brute-force generalized-eigenproblem oracle: canonical correlations are the
// square roots of the eigenvalues of inv(Sxx) Sxy inv(Syy) Syx, with the same
// trace-relative ridge the implementation applies. Solved through a plain
// non-symmetric eigensolver, a different algebraic route than the whitened
// SVD inside cca_fuse.
std::vector<double> oracle_correlations(const Matrix& x, const Matrix& y, double ridge_rel) {
  const Eigen::Index n = x.rows();
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix yc = y.rowwise() - y.colwise().mean();
  Matrix sxx = xc.transpose() * xc / static_cast<double>(n);
  Matrix syy = yc.transpose() * yc / static_cast<double>(n);
  const Matrix sxy = xc.transpose() * yc / static_cast<double>(n);
  sxx.diagonal().array() += ridge_rel * sxx.trace() / static_cast<double>(x.cols());
  syy.diagonal().array() += ridge_rel * syy.trace() / static_cast<double>(y.cols());

  const Matrix m = sxx.inverse() * sxy * syy.inverse() * sxy.transpose();
  Eigen::EigenSolver<Matrix> eig(m);
  std::vector<double> corr;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    corr.push_back(std::sqrt(std::max(0.0, eig.eigenvalues()(i).real())));
  }
  std::sort(corr.begin(), corr.end(), std::greater<>());
  return corr;
}

Matrix random_orthogonal(int dim, unsigned seed) {
  const Matrix a = test_util::random_matrix(dim, dim, seed);
  return Eigen::HouseholderQR<Matrix>(a).householderQ();
}

}  // namespace

TEST_CASE("rotated copy plus small noise yields a top correlation of at least 0.99") {
  const int n = 500, dim = 5;
  const Matrix x = test_util::random_matrix(n, dim, 1);
  const Matrix rot = random_orthogonal(dim, 2);
  const Matrix y = x * rot + 0.01 * test_util::random_matrix(n, dim, 3);

  const CcaResult cca = cca_fuse(x, y, dim);
  CHECK(cca.correlations.front() >= 0.99);
}

TEST_CASE("independent views have all correlations below 0.2 (5 seeds)") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const int n = 2000, dim = 5;
    const Matrix x = test_util::random_matrix(n, dim, 100 + seed);
    const Matrix y = test_util::random_matrix(n, dim, 200 + seed);
    const CcaResult cca = cca_fuse(x, y, dim);
    for (double c : cca.correlations) CHECK(c <= 0.2);
  }
}

TEST_CASE("5-dim instances match the generalized-eigenproblem oracle within 1e-8") {
  for (unsigned seed = 0; seed < 8; ++seed) {
    const int n = 400, dim = 5;
    const Matrix x = test_util::random_matrix(n, dim, 300 + seed);
    // Couple the views so part of the spectrum is non-trivial.
    Matrix y = test_util::random_matrix(n, dim, 400 + seed);
    y.col(0) = 0.8 * x.col(1) + 0.2 * y.col(0);
    y.col(1) = 0.5 * x.col(3) + 0.5 * y.col(1);

    const double ridge = 1e-4;
    const CcaResult cca = cca_fuse(x, y, dim, ridge);
    const std::vector<double> oracle = oracle_correlations(x, y, ridge);
    REQUIRE(cca.correlations.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK(std::abs(cca.correlations[i] - oracle[i]) < 1e-8);
    }
  }
}

TEST_CASE("correlations live in [0,1] and are non-increasing") {
  const Matrix x = test_util::random_matrix(300, 6, 500);
  Matrix y = test_util::random_matrix(300, 4, 501);
  y.col(2) = x.col(0) + 0.3 * y.col(2);
  const CcaResult cca = cca_fuse(x, y, 4);
  for (std::size_t i = 0; i < cca.correlations.size(); ++i) {
    CHECK(cca.correlations[i] >= 0.0);
    CHECK(cca.correlations[i] <= 1.0);
    if (i > 0) CHECK(cca.correlations[i] <= cca.correlations[i - 1] + 1e-12);
  }
}

TEST_CASE("projection concatenates both canonical views") {
  const Matrix x = test_util::random_matrix(100, 5, 502);
  const Matrix y = test_util::random_matrix(100, 3, 503);
  const CcaResult cca = cca_fuse(x, y, 2);
  const Matrix fused = cca_project(cca, x, y);
  CHECK(fused.rows() == 100);
  CHECK(fused.cols() == 4);
}

TEST_CASE("rank-deficient views are reported, not silently inflated") {
  // A constant (zero-variance) view cannot be whitened even with the ridge.
  const int n = 50;
  const Matrix x = Matrix::Zero(n, 3);
  const Matrix y = test_util::random_matrix(n, 3, 504);
  try {
    cca_fuse(x, y, 2);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("preconditions: sample count and component range") {
  const Matrix x = test_util::random_matrix(5, 6, 505);
  const Matrix y = test_util::random_matrix(5, 3, 506);
  try {
    cca_fuse(x, y, 2);
    FAIL("expected RankDeficient (too few samples)");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
  const Matrix x2 = test_util::random_matrix(50, 4, 507);
  const Matrix y2 = test_util::random_matrix(50, 3, 508);
  try {
    cca_fuse(x2, y2, 4);  // k > min(dims)
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}
