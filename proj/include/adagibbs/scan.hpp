#pragma once

// Scan schedules over a local/global model decomposition.
//
// A model exposes N local units z_1..z_N and one global block theta. One
// cycle of a ScanSchedule performs `batch_size` local updates followed by
// `global_repeats` global updates; the summary f(theta) is recorded after
// the last global update of the cycle.

#include <algorithm>
#include <chrono>
#include <concepts>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "adagibbs/error.hpp"
#include "adagibbs/random.hpp"

namespace adagibbs {

template <class M>
concept GibbsModel = requires(M& m, const M& cm, std::size_t i, RandomStream& rng) {
  { cm.num_local_units() } -> std::convertible_to<std::size_t>;
  m.local_update(i, rng);
  m.global_update(rng);
  { cm.summary() } -> std::convertible_to<double>;
  { cm.log_joint() } -> std::convertible_to<double>;
};

template <class C>
concept ScanClock = requires(C& c) {
  { c.now() } -> std::convertible_to<double>;
};

/// Monotonic wall clock in seconds.
struct SteadyClock {
  double now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
  }
};

enum class IndexPolicy { CyclicPermutation, UniformWithReplacement };

struct ScanSchedule {
  std::size_t batch_size = 1;
  std::size_t global_repeats = 1;
  IndexPolicy policy = IndexPolicy::CyclicPermutation;

  void validate(std::size_t num_units) const {
    if (batch_size < 1) throw DataError("schedule: batch size must be >= 1");
    if (global_repeats < 1) throw DataError("schedule: global repeats must be >= 1");
    if (batch_size > num_units)
      throw DataError("schedule: batch size " + std::to_string(batch_size) + " exceeds N = " +
                      std::to_string(num_units));
    if (batch_size > 1 && global_repeats > 1)
      throw DataError("schedule: batch size and global repeats cannot both exceed 1");
  }
};

/// Stateful index source (the sweep cursor). The cyclic policy walks a fresh
/// random permutation per epoch; a batch that straddles an epoch boundary is
/// completed from the head of the next epoch's permutation.
class IndexSelector {
 public:
  IndexSelector(IndexPolicy policy, std::size_t num_units) : policy_(policy), n_(num_units) {
    if (num_units == 0) throw DataError("index selector: no local units");
  }

  void next(std::size_t m, RandomStream& rng, std::vector<std::size_t>& out) {
    if (m < 1 || m > n_)
      throw DataError("index selector: batch size " + std::to_string(m) + " outside [1, " +
                      std::to_string(n_) + "]");
    out.resize(m);
    if (policy_ == IndexPolicy::UniformWithReplacement) {
      for (auto& i : out) i = rng.index(n_);
      return;
    }
    for (auto& i : out) {
      if (cursor_ == perm_.size()) reshuffle(rng);
      i = perm_[cursor_++];
    }
  }

  std::vector<std::size_t> next(std::size_t m, RandomStream& rng) {
    std::vector<std::size_t> out;
    next(m, rng, out);
    return out;
  }

 private:
  void reshuffle(RandomStream& rng) {
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    // Fisher-Yates with the stream's own integer draws (portable ordering).
    for (std::size_t k = n_; k > 1; --k) std::swap(perm_[k - 1], perm_[rng.index(k)]);
    cursor_ = 0;
  }

  IndexPolicy policy_;
  std::size_t n_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
};

struct TracePoint {
  std::size_t cycle = 0;
  double seconds = 0.0;
  double summary = 0.0;
};

struct ChainTrace {
  std::vector<TracePoint> points;
  double w_z = 0.0;      // median seconds per local update
  double w_theta = 0.0;  // median seconds per global update
  std::uint64_t seed = 0;

  std::vector<double> summaries() const {
    std::vector<double> s(points.size());
    std::transform(points.begin(), points.end(), s.begin(), [](const TracePoint& p) { return p.summary; });
    return s;
  }
  std::size_t size() const { return points.size(); }
};

template <class M>
using CycleObserver = std::function<void(const M&, const TracePoint&)>;

/// Stop conditions and hooks for run_scan. Burn-in cycles run first and are
/// never recorded. When `budget_seconds` > 0 the run stops at the first cycle
/// ending past the budget (or at `max_cycles`, whichever comes first).
template <class M>
struct ScanOptions {
  std::size_t cycles = 0;
  double budget_seconds = 0.0;
  std::size_t burnin = 0;
  // Called after each recorded cycle; its own running time is excluded from
  // the trace's clock.
  CycleObserver<M> observer;
};

namespace detail {

inline double median(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Durations are floored at one nanosecond so w_z, w_theta stay positive
// even for no-op updates on a coarse clock.
constexpr double kMinUpdateSeconds = 1e-9;

}  // namespace detail

/// Runs one chain under `schedule`, mutating `model` in place.
///
/// Timing: each cycle's local block and global block are timed as a whole
/// and divided by their update counts; w_z and w_theta are the medians of
/// those per-update costs over all recorded cycles.
template <GibbsModel M, ScanClock Clock = SteadyClock>
ChainTrace run_scan(M& model, const ScanSchedule& schedule, const ScanOptions<M>& options, RandomStream& rng,
                    IndexSelector* selector = nullptr, Clock clock = Clock{}) {
  const std::size_t n_units = model.num_local_units();
  schedule.validate(n_units);
  if (options.cycles == 0 && !(options.budget_seconds > 0.0))
    throw DataError("run_scan: need a cycle count or a positive time budget");

  IndexSelector own(schedule.policy, n_units);
  IndexSelector& sel = selector ? *selector : own;
  std::vector<std::size_t> batch;

  std::size_t cycle = 0;
  auto one_cycle = [&](double& local_s, double& global_s) {
    sel.next(schedule.batch_size, rng, batch);
    const double t0 = clock.now();
    for (std::size_t i : batch) model.local_update(i, rng);
    const double t1 = clock.now();
    for (std::size_t g = 0; g < schedule.global_repeats; ++g) model.global_update(rng);
    const double t2 = clock.now();
    local_s = t1 - t0;
    global_s = t2 - t1;
  };
  auto guarded = [&](double& local_s, double& global_s) {
    try {
      one_cycle(local_s, global_s);
    } catch (const ScanFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw ScanFailure(cycle, e.what());
    }
  };

  double ls = 0.0, gs = 0.0;
  for (std::size_t b = 0; b < options.burnin; ++b, ++cycle) guarded(ls, gs);

  ChainTrace trace;
  trace.seed = rng.seed();
  const bool budgeted = options.budget_seconds > 0.0;
  if (!budgeted) trace.points.reserve(options.cycles);
  std::vector<double> local_costs, global_costs;

  const double start = clock.now();
  double paused = 0.0;
  for (std::size_t c = 0;; ++c, ++cycle) {
    if (options.cycles > 0 && c >= options.cycles) break;
    guarded(ls, gs);
    local_costs.push_back(ls / static_cast<double>(schedule.batch_size));
    global_costs.push_back(gs / static_cast<double>(schedule.global_repeats));
    const double now = clock.now();
    TracePoint p{c + 1, std::max(0.0, now - start - paused), static_cast<double>(model.summary())};
    if (!trace.points.empty()) p.seconds = std::max(p.seconds, trace.points.back().seconds);
    trace.points.push_back(p);
    if (options.observer) {
      options.observer(model, p);
      paused += clock.now() - now;
    }
    if (budgeted && p.seconds >= options.budget_seconds) break;
  }
  trace.w_z = std::max(detail::median(local_costs), detail::kMinUpdateSeconds);
  trace.w_theta = std::max(detail::median(global_costs), detail::kMinUpdateSeconds);
  return trace;
}

/// Convenience overload: fixed number of recorded cycles.
template <GibbsModel M, ScanClock Clock = SteadyClock>
ChainTrace run_scan(M& model, const ScanSchedule& schedule, std::size_t n_cycles, RandomStream& rng,
                    std::size_t burnin = 0, Clock clock = Clock{}) {
  if (n_cycles < 1) throw DataError("run_scan: n_cycles must be >= 1");
  ScanOptions<M> opts;
  opts.cycles = n_cycles;
  opts.burnin = burnin;
  return run_scan(model, schedule, opts, rng, nullptr, clock);
}

}  // namespace adagibbs
