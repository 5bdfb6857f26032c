#pragma once

// A model with known costs and autocorrelation, driven by a fake clock, so
// that adaptation has an analytic answer: tau_int(m) = max(1, tau_scale / m)
// and f(m) = (m w_z + w_theta) tau_int(m).

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "adagibbs/adapt.hpp"
#include "adagibbs/random.hpp"

namespace adagibbs {

struct FakeClock {
  double* t;
  double now() const { return *t; }
};

// Summary follows an AR(1) whose integrated autocorrelation time is
// tau_scale / m, where m is the number of local updates since the previous
// global update. Each update advances a shared fake clock.
struct ScriptedModel {
  double* clock;
  double w_z = 1e-3;
  double w_theta = 1e-1;
  double tau_scale = 100.0;
  std::size_t n = 100;
  std::size_t since_global = 0;
  std::size_t last_m = 0;
  double x = 0.0;
  std::size_t constant_for_m = 0;  // this batch size yields a frozen summary

  std::size_t num_local_units() const { return n; }
  void local_update(std::size_t, RandomStream&) {
    *clock += w_z;
    ++since_global;
  }
  void global_update(RandomStream& rng) {
    *clock += w_theta;
    const std::size_t m = since_global;
    since_global = 0;
    last_m = m;
    if (m == constant_for_m) {
      x = 1.0;
      return;
    }
    const double tau = std::max(1.0, tau_scale / static_cast<double>(m));
    const double phi = (tau - 1.0) / (tau + 1.0);
    x = phi * x + std::sqrt(1.0 - phi * phi) * rng.normal();
  }
  double summary() const { return x; }
  double log_joint() const { return -0.5 * x * x; }

  double analytic_objective(std::size_t m) const {
    return objective(m, w_z, w_theta, std::max(1.0, tau_scale / static_cast<double>(m)));
  }
};

/// Adaptation of the default scripted model on the grid {1, 10, 100};
/// the analytic argmin is m = 100.
inline AdaptationResult adapt_scripted(std::uint64_t seed, double time_scale = 1.0, std::size_t n_per_arm = 2000,
                                       std::size_t constant_for_m = 0) {
  double t = 0.0;
  ScriptedModel model{&t, 1e-3 * time_scale, 1e-1 * time_scale};
  model.constant_for_m = constant_for_m;
  RandomStream rng(seed);
  AdaptOptions opts;
  opts.burnin = 100;
  opts.n_per_arm = n_per_arm;
  return adapt_batch_size(model, BatchGrid({1, 10, 100}), opts, rng, FakeClock{&t});
}

}  // namespace adagibbs
