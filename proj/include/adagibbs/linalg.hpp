#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "adagibbs/error.hpp"

namespace adagibbs {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Lower Cholesky factor L with L*L^T = a. Only the lower triangle of `a` is
/// read. Throws NotPositiveDefinite naming the first non-positive pivot.
inline MatrixXd cholesky_lower(const MatrixXd& a) {
  const Eigen::Index d = a.rows();
  if (a.cols() != d) throw DataError("cholesky_lower: matrix is not square");
  MatrixXd l = MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double diag = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) throw NotPositiveDefinite(static_cast<std::size_t>(j));
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// log|a| from its lower Cholesky factor.
inline double log_det_from_cholesky(const MatrixXd& l) {
  return 2.0 * l.diagonal().array().log().sum();
}

/// Log density of N(mean, L L^T) at x.
inline double gaussian_logpdf(const VectorXd& x, const VectorXd& mean, const MatrixXd& chol) {
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  const VectorXd u = chol.triangularView<Eigen::Lower>().solve(x - mean);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + u.squaredNorm()) -
         0.5 * log_det_from_cholesky(chol);
}

}  // namespace adagibbs
