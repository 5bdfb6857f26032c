#pragma once

// Seeded random streams and the exact samplers the bundled models need.
//
// Parameterization conventions (the model code relies on these):
//   sample_inverse_gamma(shape, scale): X with 1/X ~ Gamma(shape, rate = scale),
//       so E[X] = scale / (shape - 1). Density ∝ x^(-shape-1) exp(-scale/x).
//   sample_inverse_gaussian(mean, shape): IG with E[X] = mean and
//       Var[X] = mean^3 / shape.
//   RandomStream::gamma(shape): Gamma(shape, scale = 1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <Eigen/Dense>

#include "adagibbs/error.hpp"
#include "adagibbs/linalg.hpp"

namespace adagibbs {

/// A 64-bit Mersenne twister keyed by (seed, stream). Copies replay the same
/// sequence; distinct keys give independent streams.
class RandomStream {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit RandomStream(std::uint64_t seed = 0, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

  double exponential() { return -std::log(uniform_open()); }

  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

  /// log of a Gamma(shape, 1) draw, accurate for tiny shapes where the draw
  /// itself underflows.
  double log_gamma(double shape) {
    if (shape >= 1.0) return std::log(gamma(shape));
    return std::log(gamma(shape + 1.0)) + std::log(uniform_open()) / shape;
  }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

enum class HalfLine { NonNegative, NonPositive };

namespace detail {

// Draw from N(0,1) restricted to [a, inf).
inline double standard_normal_above(double a, RandomStream& rng) {
  constexpr double kTailCutoff = 5.0;
  if (a <= kTailCutoff) {
    // Inverse CDF on the upper tail: Q(x) = erfc(x / sqrt 2) / 2.
    const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));
    const double p = rng.uniform_open() * tail;
    const double x = std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    return std::max(x, a);
  }
  // Exponential-proposal rejection with the optimal rate; acceptance > 0.98.
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double x = a + rng.exponential() / rate;
    const double d = x - rate;
    if (std::log(rng.uniform_open()) <= -0.5 * d * d) return x;
  }
}

}  // namespace detail

/// N(mu, sigma^2) conditioned on the chosen half-line. Tail-robust: the
/// standardized bound switches to rejection sampling beyond 5 sigma.
inline double sample_truncated_normal(double mu, double sigma, HalfLine side, RandomStream& rng) {
  if (!(sigma > 0.0) || !std::isfinite(mu)) throw NumericError("truncated normal: invalid parameters");
  if (side == HalfLine::NonNegative) {
    const double x = mu + sigma * detail::standard_normal_above(-mu / sigma, rng);
    return std::max(x, 0.0);
  }
  const double x = mu - sigma * detail::standard_normal_above(mu / sigma, rng);
  return std::min(x, 0.0);
}

/// Michael–Schucany–Haas transformation; mean `mean`, shape `shape`.
inline double sample_inverse_gaussian(double mean, double shape, RandomStream& rng) {
  if (!(mean > 0.0) || !(shape > 0.0) || !std::isfinite(mean) || !std::isfinite(shape))
    throw NumericError("inverse gaussian: parameters must be positive and finite");
  const double n = rng.normal();
  const double y = n * n;
  const double my = mean * y;
  // mean - 2 mean^2 y / (sqrt(4 mean shape y + mean^2 y^2) + mean y), cancellation-free form
  const double x = mean - 2.0 * mean * my / (std::sqrt(4.0 * mean * shape * y + my * my) + my);
  const double root = std::max(x, std::numeric_limits<double>::min());
  if (rng.uniform() * (mean + root) <= mean) return root;
  return mean * mean / root;
}

inline double sample_inverse_gamma(double shape, double scale, RandomStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw NumericError("inverse gamma: parameters must be positive and finite");
  const double g = rng.gamma(shape);
  return scale / std::max(g, std::numeric_limits<double>::min());
}

/// Draw from N(mean, covariance). Throws NotPositiveDefinite on a failed
/// factorization.
inline VectorXd sample_mvn(const VectorXd& mean, const MatrixXd& covariance, RandomStream& rng) {
  const MatrixXd l = cholesky_lower(covariance);
  VectorXd e(mean.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
  return mean + l.triangularView<Eigen::Lower>() * e;
}

/// Dirichlet draw. Uses log-space gamma draws so tiny concentrations do not
/// collapse to an all-zero vector.
inline std::vector<double> sample_dirichlet(std::span<const double> alpha, RandomStream& rng) {
  if (alpha.empty()) throw DataError("dirichlet: empty concentration vector");
  std::vector<double> out(alpha.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0) || !std::isfinite(alpha[k]))
      throw DataError("dirichlet: concentrations must be positive and finite");
    out[k] = rng.log_gamma(alpha[k]);
    hi = std::max(hi, out[k]);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - hi);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

/// Index with probability proportional to `weights`.
inline std::size_t sample_categorical(std::span<const double> weights, RandomStream& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw NumericError("categorical: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw NumericError("categorical: all weights are zero");
  double u = rng.uniform() * total;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = k;
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return last_positive;
}

/// Categorical draw from unnormalized log weights; the max is subtracted
/// before exponentiation.
inline std::size_t sample_categorical_log(std::span<const double> log_weights, RandomStream& rng) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity())
      throw NumericError("categorical: log weight is NaN or +inf");
    hi = std::max(hi, lw);
  }
  if (!std::isfinite(hi)) throw NumericError("categorical: all log weights are -inf");
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - hi);
  return sample_categorical(w, rng);
}

}  // namespace adagibbs
