#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sit/error.hpp"

namespace sit {

struct FactorOptions {
  double tolerance = 1e-6;
  int max_iterations = 100;
};

struct FactorSolution {
  Eigen::VectorXd loadings;
  Eigen::VectorXd uniquenesses;
  int n_iterations = 0;
  bool converged = false;
  bool heywood = false;  // some communality reached 1 and was clamped
};

namespace detail {

struct Standardized {
  Eigen::MatrixXd z;    // column z-scores (sample SD)
  Eigen::MatrixXd corr;
};

inline Standardized standardize_columns(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  if (n < 3) fail(Errc::insufficient_data, "factor analysis needs at least 3 respondents");
  if (x.array().isNaN().any()) fail(Errc::validation, "factor analysis needs complete data");
  Standardized s;
  s.z = x.rowwise() - x.colwise().mean();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double sd = std::sqrt(s.z.col(c).squaredNorm() / static_cast<double>(n - 1));
    if (!(sd > 0.0))
      fail(Errc::degenerate, "item " + std::to_string(c + 1) + " has zero variance");
    s.z.col(c) /= sd;
  }
  s.corr = (s.z.transpose() * s.z) / static_cast<double>(n - 1);
  return s;
}

}  // namespace detail

// One-factor iterated principal-axis factoring on a correlation matrix.
// Communalities start at the squared multiple correlations and are replaced
// by squared loadings until their largest change drops below tolerance.
inline FactorSolution factor_single_corr(const Eigen::MatrixXd& corr,
                                         const FactorOptions& opt = {}) {
  const auto k = corr.rows();
  if (k < 3) fail(Errc::insufficient_data, "factor analysis needs at least 3 items");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(corr, Eigen::EigenvaluesOnly);
  if (check.eigenvalues().minCoeff() < -1e-8)
    fail(Errc::validation, "correlation matrix is not positive semidefinite");

  FactorSolution sol;
  Eigen::VectorXd h(k);
  {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(corr);
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
    for (Eigen::Index i = 0; i < k; ++i) {
      const double smc = 1.0 - 1.0 / inv(i, i);
      h(i) = (std::isfinite(smc) && smc > 0.0) ? std::min(smc, 1.0)
                                                 : corr.row(i).cwiseAbs().maxCoeff();
    }
  }
  for (Eigen::Index i = 0; i < k; ++i)
    if (h(i) >= 1.0) sol.heywood = true;

  Eigen::VectorXd loadings = Eigen::VectorXd::Zero(k);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::MatrixXd reduced = corr;
    reduced.diagonal() = h;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
    const double top = std::max(es.eigenvalues()(k - 1), 0.0);
    loadings = es.eigenvectors().col(k - 1) * std::sqrt(top);
    Eigen::VectorXd next = loadings.array().square();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (next(i) >= 1.0) {
        next(i) = 1.0;
        sol.heywood = true;
      }
    }
    const double change = (next - h).cwiseAbs().maxCoeff();
    h = next;
    sol.n_iterations = it;
    if (change < opt.tolerance) {
      sol.converged = true;
      break;
    }
  }
  loadings = loadings.cwiseMax(-1.0).cwiseMin(1.0);
  if (loadings.sum() < 0.0) loadings = -loadings;
  sol.loadings = loadings;
  sol.uniquenesses = (1.0 - loadings.array().square()).matrix();
  return sol;
}

inline FactorSolution factor_single(const Eigen::MatrixXd& data, const FactorOptions& opt = {}) {
  return factor_single_corr(detail::standardize_columns(data).corr, opt);
}

// Regression (Thomson) factor scores: z * R^-1 * loadings. Not restandardized.
inline Eigen::VectorXd factor_scores(const Eigen::MatrixXd& data, const FactorSolution& sol) {
  const auto s = detail::standardize_columns(data);
  const Eigen::VectorXd w = s.corr.completeOrthogonalDecomposition().solve(sol.loadings);
  return s.z * w;
}

}  // namespace sit
