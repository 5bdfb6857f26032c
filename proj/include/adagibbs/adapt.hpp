#pragma once

// Adaptive batch-size selection: sweep a grid of batch sizes, measure the
// per-arm update costs and tau_int, and keep the m minimizing
//     f(m) = (m * w_z + w_theta) * tau_int(m),
// the wall-clock cost of one effectively independent theta-sample.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adagibbs/diagnostics.hpp"
#include "adagibbs/scan.hpp"

namespace adagibbs {

class BatchGrid {
 public:
  BatchGrid() = default;
  explicit BatchGrid(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) { validate(); }

  /// Also checks every size fits a model with `num_units` local units.
  void validate(std::optional<std::size_t> num_units = std::nullopt) const {
    if (sizes_.empty()) throw DataError("batch grid is empty");
    if (sizes_.front() < 1) throw DataError("batch grid sizes must be >= 1");
    for (std::size_t k = 1; k < sizes_.size(); ++k)
      if (sizes_[k] <= sizes_[k - 1]) throw DataError("batch grid must be strictly increasing");
    if (num_units && sizes_.back() > *num_units)
      throw DataError("batch grid size " + std::to_string(sizes_.back()) + " exceeds N = " +
                      std::to_string(*num_units));
  }

  /// Copy with `n` appended when it is not already the last size.
  BatchGrid with_full_sweep(std::size_t n) const {
    std::vector<std::size_t> s = sizes_;
    if (s.back() != n) s.push_back(n);
    return BatchGrid(std::move(s));
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t size() const { return sizes_.size(); }

 private:
  std::vector<std::size_t> sizes_;
};

/// Geometric grid round(ratio^k), k = 0, 1, ... with duplicates removed.
/// Stops after `max_arms` sizes. Sizes above N are dropped; if that cut the
/// grid short, N itself closes the grid.
inline BatchGrid make_log_grid(std::size_t n, double ratio, std::size_t max_arms) {
  if (n < 1) throw DataError("make_log_grid: N must be >= 1");
  if (!(ratio > 1.0)) throw DataError("make_log_grid: ratio must exceed 1");
  if (max_arms < 1) throw DataError("make_log_grid: max_arms must be >= 1");
  std::vector<std::size_t> sizes;
  bool hit_n = false;
  for (int k = 0; sizes.size() < max_arms; ++k) {
    const double v = std::round(std::pow(ratio, k));
    if (v > static_cast<double>(n)) {
      hit_n = true;
      break;
    }
    const auto m = static_cast<std::size_t>(v);
    if (sizes.empty() || m > sizes.back()) sizes.push_back(m);
  }
  if (hit_n && sizes.back() != n) {
    if (sizes.size() == max_arms) sizes.back() = n;
    else sizes.push_back(n);
  }
  return BatchGrid(std::move(sizes));
}

/// f(m) = (m w_z + w_theta) tau_int, exactly.
inline double objective(std::size_t m, double w_z, double w_theta, double tau_int) {
  const bool ok = m >= 1 && std::isfinite(w_z) && std::isfinite(w_theta) && std::isfinite(tau_int) &&
                  w_z > 0.0 && w_theta > 0.0 && tau_int > 0.0;
  if (!ok) throw NumericError("objective: inputs must be positive and finite");
  return (static_cast<double>(m) * w_z + w_theta) * tau_int;
}

struct ArmResult {
  std::size_t m = 0;
  double w_z = 0.0;
  double w_theta = 0.0;
  double tau_int = 0.0;
  double objective = std::numeric_limits<double>::infinity();
  std::optional<std::string> warning;  // set when the arm was excluded
};

struct AdaptationResult {
  std::vector<ArmResult> per_arm;  // ascending m
  std::size_t m_star = 0;
  ChainTrace adaptation_trace;     // arms concatenated in visit order
  std::vector<std::size_t> visit_order;
};

/// argmin over finite objectives; ties resolve to the smaller m.
inline std::size_t select_batch_size(const std::vector<ArmResult>& arms) {
  std::optional<std::size_t> best;
  double best_f = std::numeric_limits<double>::infinity();
  for (const auto& a : arms) {
    if (!std::isfinite(a.objective)) continue;
    if (!best || a.objective < best_f || (a.objective == best_f && a.m < *best)) {
      best = a.m;
      best_f = a.objective;
    }
  }
  if (!best) throw DegenerateSeries("adaptation: every arm produced a degenerate series");
  return *best;
}

struct AdaptOptions {
  std::size_t burnin = 500;
  std::size_t n_per_arm = 200;
  std::optional<std::size_t> t_max;
  IndexPolicy policy = IndexPolicy::CyclicPermutation;
  bool append_full_sweep = true;  // evaluate m = N even when the grid omits it
};

inline constexpr std::size_t kMinSamplesPerArm = 50;

/// Evaluates every arm of `grid` on one chain whose state carries over from
/// arm to arm. Burn-in runs once, at the first visited arm. Arms are visited
/// in a uniformly random order drawn from `rng`.
template <GibbsModel M, ScanClock Clock = SteadyClock>
AdaptationResult adapt_batch_size(M& model, const BatchGrid& grid_in, const AdaptOptions& opts, RandomStream& rng,
                                  Clock clock = Clock{}) {
  const std::size_t n_units = model.num_local_units();
  if (opts.n_per_arm < kMinSamplesPerArm)
    throw DataError("adapt: n_per_arm must be >= " + std::to_string(kMinSamplesPerArm));
  const BatchGrid grid = opts.append_full_sweep ? grid_in.with_full_sweep(n_units) : grid_in;
  grid.validate(n_units);

  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);

  AdaptationResult result;
  result.adaptation_trace.seed = rng.seed();
  std::map<std::size_t, ArmResult> arms;
  double time_offset = 0.0;
  bool first = true;
  for (std::size_t k : order) {
    const std::size_t m = grid.sizes()[k];
    ScanSchedule schedule{m, 1, opts.policy};
    ScanOptions<M> so;
    so.cycles = opts.n_per_arm;
    so.burnin = first ? opts.burnin : 0;
    first = false;
    const ChainTrace t = run_scan(model, schedule, so, rng, nullptr, clock);

    for (const auto& p : t.points) {
      auto q = p;
      q.cycle = result.adaptation_trace.points.size() + 1;
      q.seconds += time_offset;
      result.adaptation_trace.points.push_back(q);
    }
    if (!t.points.empty()) time_offset += t.points.back().seconds;

    ArmResult arm;
    arm.m = m;
    arm.w_z = t.w_z;
    arm.w_theta = t.w_theta;
    try {
      arm.tau_int = integrated_autocorrelation_time(t.summaries(), opts.t_max);
      arm.objective = objective(m, arm.w_z, arm.w_theta, arm.tau_int);
    } catch (const DegenerateSeries& e) {
      arm.tau_int = std::numeric_limits<double>::quiet_NaN();
      arm.objective = std::numeric_limits<double>::infinity();
      arm.warning = e.what();
    }
    arms[m] = arm;
    result.visit_order.push_back(m);
  }
  for (auto& [m, a] : arms) result.per_arm.push_back(a);
  result.m_star = select_batch_size(result.per_arm);
  return result;
}

struct PhaseBudgets {
  std::size_t burnin = 500;
  std::size_t n_per_arm = 200;
  std::size_t sampling_cycles = 0;     // used when sampling_seconds == 0
  double sampling_seconds = 0.0;
  std::optional<std::size_t> t_max;
  IndexPolicy policy = IndexPolicy::CyclicPermutation;
};

/// Adaptation followed by sampling at m*, continuing from the adapted state.
template <GibbsModel M, ScanClock Clock = SteadyClock>
std::pair<AdaptationResult, ChainTrace> run_two_phase(M& model, const BatchGrid& grid, const PhaseBudgets& budgets,
                                                      RandomStream& rng, Clock clock = Clock{},
                                                      CycleObserver<M> observer = {}) {
  AdaptOptions ao;
  ao.burnin = budgets.burnin;
  ao.n_per_arm = budgets.n_per_arm;
  ao.t_max = budgets.t_max;
  ao.policy = budgets.policy;
  AdaptationResult adapted = adapt_batch_size(model, grid, ao, rng, clock);

  ScanOptions<M> so;
  so.cycles = budgets.sampling_cycles;
  so.budget_seconds = budgets.sampling_seconds;
  so.observer = std::move(observer);
  ChainTrace sampled = run_scan(model, ScanSchedule{adapted.m_star, 1, budgets.policy}, so, rng, nullptr, clock);
  return {std::move(adapted), std::move(sampled)};
}

/// Most frequent m* across independent adaptations (ties: smaller m).
inline std::size_t modal_batch_size(const std::vector<AdaptationResult>& results) {
  if (results.empty()) throw DataError("modal_batch_size: no results");
  std::map<std::size_t, std::size_t> votes;
  for (const auto& r : results) ++votes[r.m_star];
  std::size_t best = 0, best_votes = 0;
  for (auto [m, v] : votes)
    if (v > best_votes) best = m, best_votes = v;
  return best;
}

}  // namespace adagibbs
