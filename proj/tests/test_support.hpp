#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace testing_support {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  std::size_t n = 0;
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  m.n = x.size();
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(m.n);
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(m.n - 1);
  return m;
}

inline std::vector<double> draws(std::size_t n, const std::function<double()>& f) {
  std::vector<double> out(n);
  for (auto& v : out) v = f();
  return out;
}

inline double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
// Upper tail 1 - Phi(x).
inline double std_normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Total variation distance between two distributions on the same support.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

/// Stationary AR(1) with unit innovation variance.
template <class Rng>
std::vector<double> ar1(std::size_t n, double phi, Rng& rng) {
  std::vector<double> x(n);
  double v = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (auto& e : x) {
    e = v;
    v = phi * v + rng.normal();
  }
  return x;
}

}  // namespace testing_support
