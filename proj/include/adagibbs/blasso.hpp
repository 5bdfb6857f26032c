#pragma once

// Bayesian lasso regression with a probit link.
//
//   z_i | w        ~ N(x_i^T w, 1) truncated to the half-line of y_i   (local)
//   sigma^2 | .    ~ IG((n-1)/2 + d/2, ||r - Xw||^2 / 2 + w^T D^-1 w / 2)
//   1/tau_j^2 | .  ~ InvGaussian(sqrt(lambda^2 sigma^2 / w_j^2), lambda^2)
//   w | .          ~ N(A^-1 X^T r, sigma^2 A^-1),  A = X^T X + D^-1      (global)
//
// r is the latent vector z in probit mode and the observed response y in
// linear mode. X^T r and r^T r are kept up to date by the local updates so a
// global update costs O(d^3) instead of O(n d).

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "adagibbs/error.hpp"
#include "adagibbs/linalg.hpp"
#include "adagibbs/random.hpp"

namespace adagibbs {

struct BlassoData {
  MatrixXd X;   // n x d
  VectorXd y;   // labels in {-1, +1} (probit) or continuous responses (linear)
  std::optional<VectorXd> w_true;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(X.cols()); }
};

enum class BlassoMode { Probit, Linear };

struct BlassoState {
  VectorXd w;
  double sigma2 = 1.0;
  VectorXd tau2;
  VectorXd z;  // probit latents; empty in linear mode
  double lambda = 1.0;
};

class BlassoSampler {
 public:
  BlassoSampler(std::shared_ptr<const BlassoData> data, double lambda, BlassoMode mode = BlassoMode::Probit)
      : data_(std::move(data)), mode_(mode) {
    if (!data_ || data_->n() == 0 || data_->d() == 0) throw DataError("blasso: empty design matrix");
    if (static_cast<std::size_t>(data_->y.size()) != data_->n()) throw DataError("blasso: |y| != rows of X");
    if (!(lambda > 0.0)) throw DataError("blasso: lambda must be positive");
    const auto d = static_cast<Eigen::Index>(data_->d());
    xtx_ = data_->X.transpose() * data_->X;
    state_.lambda = lambda;
    state_.w = VectorXd::Zero(d);
    state_.tau2 = VectorXd::Ones(d);
    if (mode_ == BlassoMode::Probit) {
      state_.z = data_->y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    }
    refresh_sufficient_stats();
  }

  std::size_t num_local_units() const { return data_->n(); }

  void local_update(std::size_t i, RandomStream& rng) {
    if (mode_ == BlassoMode::Linear) return;
    const auto row = data_->X.row(static_cast<Eigen::Index>(i));
    const double mu = row.dot(state_.w);
    const HalfLine side = data_->y[static_cast<Eigen::Index>(i)] >= 0.0 ? HalfLine::NonNegative : HalfLine::NonPositive;
    double& zi = state_.z[static_cast<Eigen::Index>(i)];
    const double fresh = sample_truncated_normal(mu, 1.0, side, rng);
    const double delta = fresh - zi;
    xtr_.noalias() += delta * row.transpose();
    rtr_ += fresh * fresh - zi * zi;
    zi = fresh;
    ++updates_since_refresh_;
  }

  void global_update(RandomStream& rng) {
    if (updates_since_refresh_ >= data_->n()) refresh_sufficient_stats();
    const auto d = static_cast<Eigen::Index>(data_->d());
    const double n = static_cast<double>(data_->n());
    VectorXd& w = state_.w;

    double rss = rtr_ - 2.0 * w.dot(xtr_) + w.dot(xtx_ * w);
    if (!(rss > 1e-10 * (1.0 + rtr_))) rss = (response() - data_->X * w).squaredNorm();
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) penalty += w[j] * w[j] / state_.tau2[j];
    state_.sigma2 = sample_inverse_gamma((n - 1.0) / 2.0 + static_cast<double>(d) / 2.0, 0.5 * rss + 0.5 * penalty, rng);

    const double lambda2 = state_.lambda * state_.lambda;
    for (Eigen::Index j = 0; j < d; ++j) {
      double wj = w[j];
      if (wj == 0.0) {
        wj = std::signbit(wj) ? -1e-12 : 1e-12;
        ++zero_weight_warnings_;
      }
      const double mean = std::sqrt(lambda2 * state_.sigma2 / (wj * wj));
      state_.tau2[j] = 1.0 / sample_inverse_gaussian(mean, lambda2, rng);
    }

    MatrixXd a = xtx_;
    for (Eigen::Index j = 0; j < d; ++j) a(j, j) += 1.0 / state_.tau2[j];
    const MatrixXd l = cholesky_lower(a);
    const auto lower = l.triangularView<Eigen::Lower>();
    VectorXd mean = lower.solve(xtr_);
    lower.transpose().solveInPlace(mean);
    VectorXd e(d);
    for (Eigen::Index j = 0; j < d; ++j) e[j] = rng.normal();
    lower.transpose().solveInPlace(e);
    w = mean + std::sqrt(state_.sigma2) * e;
    if (!w.allFinite()) throw NumericError("blasso: non-finite regression coefficients");
  }

  /// ||w - w_true||^2 when the truth is known, otherwise w_1.
  double summary() const {
    if (data_->w_true) return (state_.w - *data_->w_true).squaredNorm();
    return state_.w[0];
  }

  double log_joint() const {
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    const double n = static_cast<double>(data_->n());
    const auto d = static_cast<Eigen::Index>(data_->d());
    const double lambda2 = state_.lambda * state_.lambda;
    double lp = 0.0;
    const VectorXd resid = response() - data_->X * state_.w;
    if (mode_ == BlassoMode::Probit) {
      lp += -0.5 * (n * kLog2Pi + resid.squaredNorm());
    } else {
      lp += -0.5 * (n * (kLog2Pi + std::log(state_.sigma2)) + resid.squaredNorm() / state_.sigma2);
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = state_.sigma2 * state_.tau2[j];
      lp += -0.5 * (kLog2Pi + std::log(v) + state_.w[j] * state_.w[j] / v);
      lp += std::log(lambda2 / 2.0) - lambda2 / 2.0 * state_.tau2[j];
    }
    lp += -0.5 * std::log(state_.sigma2);  // improper prior implied by the (n-1)/2 shape
    return lp;
  }

  const BlassoState& state() const { return state_; }
  /// Replaces the state; sufficient statistics are recomputed.
  void set_state(BlassoState s) {
    state_ = std::move(s);
    refresh_sufficient_stats();
  }
  const BlassoData& data() const { return *data_; }
  BlassoMode mode() const { return mode_; }
  std::size_t zero_weight_warnings() const { return zero_weight_warnings_; }

 private:
  const VectorXd& response() const { return mode_ == BlassoMode::Probit ? state_.z : data_->y; }

  void refresh_sufficient_stats() {
    const VectorXd& r = response();
    xtr_ = data_->X.transpose() * r;
    rtr_ = r.squaredNorm();
    updates_since_refresh_ = 0;
  }

  std::shared_ptr<const BlassoData> data_;
  BlassoMode mode_;
  BlassoState state_;
  MatrixXd xtx_;
  VectorXd xtr_;
  double rtr_ = 0.0;
  std::size_t updates_since_refresh_ = 0;
  std::size_t zero_weight_warnings_ = 0;
};

}  // namespace adagibbs
