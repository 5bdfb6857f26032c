#pragma once

// Autocorrelation, integrated autocorrelation time, effective sample size,
// the time-budgeted asymptotic variance and the multi-chain EPSR statistic.
// All functions are pure.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "adagibbs/error.hpp"

namespace adagibbs {

/// Normalization of the lag-t autocorrelation.
///   Standard:   (1/n) sum_{i<n-t} c_i c_{i+t}  /  (1/n) sum c_i^2     (rho_0 = 1)
///   PaperExact: (1/(n-t)) sum_{i<n-t} c_i c_{i+t}  /  (1/(n-1)) sum c_i^2
/// where c_i = f_i - mean. PaperExact gives rho_0 = (n-1)/n and may exceed 1
/// in magnitude for short series.
enum class AcfMode { Standard, PaperExact };

namespace detail {

struct Centered {
  std::vector<double> c;
  double sum_sq = 0.0;
};

inline Centered center(std::span<const double> x) {
  if (x.size() < 2) throw DataError("diagnostics: need at least 2 samples");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw DegenerateSeries();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  Centered out;
  out.c.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.c[i] = x[i] - mean;
    out.sum_sq += out.c[i] * out.c[i];
  }
  if (!(out.sum_sq > 0.0) || !std::isfinite(out.sum_sq)) throw DegenerateSeries();
  return out;
}

inline double lag_sum(const std::vector<double>& c, std::size_t t) {
  double s = 0.0;
  const std::size_t n = c.size();
  for (std::size_t i = 0; i + t < n; ++i) s += c[i] * c[i + t];
  return s;
}

inline double acf_from_centered(const Centered& z, std::size_t t, AcfMode mode) {
  const double n = static_cast<double>(z.c.size());
  const double num = lag_sum(z.c, t);
  if (mode == AcfMode::Standard) return num / z.sum_sq;
  return (num / (n - static_cast<double>(t))) / (z.sum_sq / (n - 1.0));
}

}  // namespace detail

inline double mean(std::span<const double> x) {
  if (x.empty()) throw DataError("mean of empty sequence");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Unbiased sample variance (1/(n-1)).
inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw DataError("variance: need at least 2 samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double autocorrelation(std::span<const double> samples, std::size_t lag, AcfMode mode = AcfMode::Standard) {
  if (lag >= samples.size()) throw DataError("autocorrelation: lag must be < n");
  return detail::acf_from_centered(detail::center(samples), lag, mode);
}

/// rho_0..rho_{t_max}.
inline std::vector<double> autocorrelation_series(std::span<const double> samples, std::size_t t_max,
                                                  AcfMode mode = AcfMode::Standard) {
  if (t_max >= samples.size()) throw DataError("autocorrelation: t_max must be < n");
  const auto z = detail::center(samples);
  std::vector<double> rho(t_max + 1);
  for (std::size_t t = 0; t <= t_max; ++t) rho[t] = detail::acf_from_centered(z, t, mode);
  return rho;
}

inline std::size_t default_max_lag(std::size_t n) { return std::min<std::size_t>(n / 4, 1000); }

/// Lower clamp applied to tau_int.
inline constexpr double kMinTauInt = 0.1;

/// tau_int = 1 + 2 sum_{t>=1} rho_t with the standard ACF, truncated before
/// the first negative rho_t or at t_max, clamped below at 0.1.
inline double integrated_autocorrelation_time(std::span<const double> samples,
                                              std::optional<std::size_t> t_max = std::nullopt) {
  const std::size_t n = samples.size();
  if (n < 10) throw DataError("tau_int: need at least 10 samples");
  const std::size_t cap = t_max.value_or(default_max_lag(n));
  if (cap >= n) throw DataError("tau_int: t_max must be < n");
  const auto z = detail::center(samples);
  double tau = 1.0;
  for (std::size_t t = 1; t <= cap; ++t) {
    const double rho = detail::acf_from_centered(z, t, AcfMode::Standard);
    if (rho < 0.0) break;
    tau += 2.0 * rho;
  }
  return std::max(tau, kMinTauInt);
}

inline double effective_sample_size(std::span<const double> samples,
                                    std::optional<std::size_t> t_max = std::nullopt) {
  return static_cast<double>(samples.size()) / integrated_autocorrelation_time(samples, t_max);
}

/// VAR[f-bar] ~ (sigma^2 / T) (m w_z + w_theta) tau_int for a budget of T seconds.
inline double asymptotic_variance(std::span<const double> samples, std::size_t batch_size, double w_z,
                                  double w_theta, double budget_seconds) {
  if (!(budget_seconds > 0.0) || !(w_z > 0.0) || !(w_theta > 0.0))
    throw DataError("asymptotic_variance: T, w_z, w_theta must be positive");
  const double tau = integrated_autocorrelation_time(samples);
  const double sigma2 = sample_variance(samples);
  return sigma2 / budget_seconds * (static_cast<double>(batch_size) * w_z + w_theta) * tau;
}

/// Batch-means estimate of VAR[x-bar]: the series is cut into `num_batches`
/// equal contiguous batches (a remainder at the front is dropped) and the
/// variance of the batch means is divided by the batch count.
inline double batch_means_variance(std::span<const double> samples, std::size_t num_batches = 30) {
  if (num_batches < 2) throw DataError("batch_means_variance: need at least 2 batches");
  const std::size_t len = samples.size() / num_batches;
  if (len < 1) throw DataError("batch_means_variance: fewer samples than batches");
  const std::size_t skip = samples.size() - len * num_batches;
  std::vector<double> means(num_batches);
  for (std::size_t b = 0; b < num_batches; ++b) means[b] = mean(samples.subspan(skip + b * len, len));
  return sample_variance(means) / static_cast<double>(num_batches);
}

/// Estimated potential scale reduction: sqrt(V / W) with
/// V = (n-1)/n W + B/n, W the mean within-chain variance and B = n times the
/// variance of the chain means (both with unbiased normalizers).
inline double epsr(std::span<const std::vector<double>> chains) {
  const std::size_t j = chains.size();
  if (j < 2) throw DataError("epsr: need at least 2 chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw DataError("epsr: chains need at least 10 samples");
  for (const auto& c : chains)
    if (c.size() != n) throw DataError("epsr: chains must have equal length");

  std::vector<double> means(j);
  double w = 0.0;
  for (std::size_t k = 0; k < j; ++k) {
    means[k] = mean(chains[k]);
    w += sample_variance(chains[k]);
  }
  w /= static_cast<double>(j);
  if (!(w > 0.0)) throw DegenerateSeries("epsr: all chains constant");
  const double nn = static_cast<double>(n);
  const double b = nn * sample_variance(means);
  const double v = (nn - 1.0) / nn * w + b / nn;
  return std::sqrt(v / w);
}

struct DiagnosticsReport {
  std::size_t batch_size = 0;
  std::size_t n = 0;
  double tau_int = 0.0;
  double ess = 0.0;
  double sigma2 = 0.0;
  std::optional<double> epsr;
  std::optional<double> objective;
};

inline DiagnosticsReport diagnose(std::span<const double> samples, std::optional<std::size_t> t_max = std::nullopt) {
  DiagnosticsReport r;
  r.n = samples.size();
  r.tau_int = integrated_autocorrelation_time(samples, t_max);
  r.ess = static_cast<double>(r.n) / r.tau_int;
  r.sigma2 = sample_variance(samples);
  return r;
}

}  // namespace adagibbs
