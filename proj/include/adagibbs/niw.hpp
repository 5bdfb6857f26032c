#pragma once

// Normal-inverse-Wishart conjugate algebra for Gaussian clusters.
//
// Prior: Sigma ~ IW(nu0, Psi0), mu | Sigma ~ N(m0, Sigma / kappa0).
// After n points with sum s and scatter sum S = sum x x^T:
//   kappa_n = kappa0 + n,  nu_n = nu0 + n,
//   m_n     = (kappa0 m0 + s) / kappa_n,
//   Psi_n   = Psi0 + S + kappa0 m0 m0^T - kappa_n m_n m_n^T.
// The posterior predictive is a multivariate Student-t with nu_n - d + 1
// degrees of freedom, location m_n and shape Psi_n (kappa_n + 1) / (kappa_n (nu_n - d + 1)).

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "adagibbs/error.hpp"
#include "adagibbs/linalg.hpp"
#include "adagibbs/random.hpp"

namespace adagibbs {

struct NiwPrior {
  VectorXd mean;
  double kappa = 1.0;
  double nu = 3.0;
  MatrixXd scale;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }

  void validate() const {
    const auto d = mean.size();
    if (d == 0) throw DataError("niw: zero dimension");
    if (scale.rows() != d || scale.cols() != d) throw DataError("niw: scale matrix has wrong shape");
    if (!(kappa > 0.0)) throw DataError("niw: kappa must be positive");
    if (!(nu > static_cast<double>(d) - 1.0)) throw DataError("niw: nu must exceed dim - 1");
    cholesky_lower(scale);
  }
};

/// Count, sum and scatter sum of the points in one cluster.
struct GaussianStats {
  std::size_t count = 0;
  VectorXd sum;
  MatrixXd outer;

  explicit GaussianStats(std::size_t dim = 0)
      : sum(VectorXd::Zero(static_cast<Eigen::Index>(dim))),
        outer(MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

  void add(const VectorXd& x) {
    ++count;
    sum += x;
    outer.noalias() += x * x.transpose();
  }
  void remove(const VectorXd& x) {
    if (count == 0) throw NumericError("gaussian stats: remove from empty cluster");
    --count;
    sum -= x;
    outer.noalias() -= x * x.transpose();
    if (count == 0) {
      sum.setZero();
      outer.setZero();
    }
  }
};

struct NiwPosterior {
  VectorXd mean;
  double kappa = 0.0;
  double nu = 0.0;
  MatrixXd scale;
};

inline NiwPosterior niw_posterior(const NiwPrior& prior, const GaussianStats& stats) {
  NiwPosterior post;
  const double n = static_cast<double>(stats.count);
  post.kappa = prior.kappa + n;
  post.nu = prior.nu + n;
  post.mean = (prior.kappa * prior.mean + stats.sum) / post.kappa;
  post.scale = prior.scale + stats.outer + prior.kappa * prior.mean * prior.mean.transpose() -
               post.kappa * post.mean * post.mean.transpose();
  post.scale = 0.5 * (post.scale + post.scale.transpose());
  return post;
}

/// Multivariate log-gamma, log Gamma_d(a).
inline double log_multigamma(double a, std::size_t d) {
  double out = 0.25 * static_cast<double>(d * (d - 1)) * std::log(std::numbers::pi);
  for (std::size_t j = 0; j < d; ++j) out += std::lgamma(a - 0.5 * static_cast<double>(j));
  return out;
}

/// Multivariate Student-t with cached factorization.
struct StudentT {
  VectorXd location;
  MatrixXd chol;  // lower factor of the shape matrix
  double dof = 1.0;
  double log_norm = 0.0;

  StudentT() = default;
  StudentT(VectorXd loc, const MatrixXd& shape, double df) : location(std::move(loc)), chol(cholesky_lower(shape)), dof(df) {
    const double d = static_cast<double>(location.size());
    log_norm = std::lgamma(0.5 * (dof + d)) - std::lgamma(0.5 * dof) - 0.5 * d * std::log(dof * std::numbers::pi) -
               0.5 * log_det_from_cholesky(chol);
  }

  double logpdf(const VectorXd& x) const {
    const double d = static_cast<double>(location.size());
    const VectorXd u = chol.triangularView<Eigen::Lower>().solve(x - location);
    return log_norm - 0.5 * (dof + d) * std::log1p(u.squaredNorm() / dof);
  }
};

inline StudentT niw_predictive(const NiwPrior& prior, const GaussianStats& stats) {
  const NiwPosterior post = niw_posterior(prior, stats);
  const double d = static_cast<double>(prior.dim());
  const double df = post.nu - d + 1.0;
  const MatrixXd shape = post.scale * ((post.kappa + 1.0) / (post.kappa * df));
  return StudentT(post.mean, shape, df);
}

/// log p(x | points in the cluster) under the collapsed NIW model.
inline double niw_predictive_logdensity(const GaussianStats& stats, const NiwPrior& prior, const VectorXd& x) {
  return niw_predictive(prior, stats).logpdf(x);
}

/// log marginal likelihood of all points summarized by `stats`.
inline double niw_log_marginal(const NiwPrior& prior, const GaussianStats& stats) {
  const NiwPosterior post = niw_posterior(prior, stats);
  const std::size_t d = prior.dim();
  const double n = static_cast<double>(stats.count);
  const double dd = static_cast<double>(d);
  return -0.5 * n * dd * std::log(std::numbers::pi) + log_multigamma(0.5 * post.nu, d) -
         log_multigamma(0.5 * prior.nu, d) + 0.5 * prior.nu * log_det_from_cholesky(cholesky_lower(prior.scale)) -
         0.5 * post.nu * log_det_from_cholesky(cholesky_lower(post.scale)) +
         0.5 * dd * (std::log(prior.kappa) - std::log(post.kappa));
}

/// Sigma ~ IW(nu, Psi) through the Bartlett decomposition of its inverse,
/// returned as the lower Cholesky factor of Sigma.
inline MatrixXd sample_inverse_wishart_chol(double nu, const MatrixXd& scale, RandomStream& rng) {
  const Eigen::Index d = scale.rows();
  const MatrixXd l = cholesky_lower(scale);
  MatrixXd a = MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(2.0 * rng.gamma(0.5 * (nu - static_cast<double>(i))));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  // Sigma = L A^-T A^-1 L^T = B B^T with B = L A^-T, re-factored to lower form.
  const MatrixXd at = a.transpose();
  const MatrixXd b = at.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(l);
  const MatrixXd sigma = b * b.transpose();
  return cholesky_lower(0.5 * (sigma + sigma.transpose()));
}

struct GaussianParams {
  VectorXd mu;
  MatrixXd sigma_chol;
};

/// (mu, Sigma) from the NIW posterior.
inline GaussianParams sample_niw(const NiwPosterior& post, RandomStream& rng) {
  GaussianParams p;
  p.sigma_chol = sample_inverse_wishart_chol(post.nu, post.scale, rng);
  VectorXd e(post.mean.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
  p.mu = post.mean + p.sigma_chol.triangularView<Eigen::Lower>() * e / std::sqrt(post.kappa);
  return p;
}

/// log NIW(mu, Sigma | prior), Sigma given by its lower Cholesky factor.
inline double niw_log_density(const NiwPrior& prior, const GaussianParams& p) {
  const std::size_t d = prior.dim();
  const double dd = static_cast<double>(d);
  const MatrixXd& l = p.sigma_chol;
  const double logdet_sigma = log_det_from_cholesky(l);
  // tr(Psi Sigma^-1) = ||L^-1 C||_F^2 with C C^T = Psi
  const MatrixXd c = cholesky_lower(prior.scale);
  const MatrixXd li_c = l.triangularView<Eigen::Lower>().solve(c);
  const double lp_iw = 0.5 * prior.nu * log_det_from_cholesky(c) - 0.5 * prior.nu * dd * std::log(2.0) -
                       log_multigamma(0.5 * prior.nu, d) - 0.5 * (prior.nu + dd + 1.0) * logdet_sigma -
                       0.5 * li_c.squaredNorm();
  const MatrixXd mean_chol = l / std::sqrt(prior.kappa);
  return lp_iw + gaussian_logpdf(p.mu, prior.mean, mean_chol);
}

}  // namespace adagibbs
