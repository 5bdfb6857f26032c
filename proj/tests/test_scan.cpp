#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "adagibbs/scan.hpp"
#include "test_support.hpp"

using namespace adagibbs;

namespace {

// Records the update order as a string: 'z' per local update, 't' per global.
struct OrderModel {
  std::size_t n = 3;
  std::string log;
  std::size_t globals = 0;
  std::size_t num_local_units() const { return n; }
  void local_update(std::size_t, RandomStream&) { log += 'z'; }
  void global_update(RandomStream&) {
    log += 't';
    ++globals;
  }
  double summary() const { return static_cast<double>(globals); }
  double log_joint() const { return 0.0; }
};

struct FakeClock {
  double* t;
  double now() const { return *t; }
};

// Advances a shared fake clock by fixed amounts per update.
struct TimedModel {
  double* t;
  double local_cost;
  double global_cost;
  std::size_t n = 10;
  std::size_t count = 0;
  std::size_t num_local_units() const { return n; }
  void local_update(std::size_t, RandomStream&) { *t += local_cost; }
  void global_update(RandomStream&) {
    *t += global_cost;
    ++count;
  }
  double summary() const { return static_cast<double>(count); }
  double log_joint() const { return 0.0; }
};

// Two binary variables with an explicit joint; z is the single local unit.
struct TwoVariableModel {
  double p[2][2] = {{0.1, 0.2}, {0.3, 0.4}};  // p[z][theta]
  int z = 0;
  int theta = 0;
  std::size_t num_local_units() const { return 1; }
  void local_update(std::size_t, RandomStream& rng) {
    const double w1 = p[1][theta], w0 = p[0][theta];
    z = rng.uniform() * (w0 + w1) < w1 ? 1 : 0;
  }
  void global_update(RandomStream& rng) {
    const double w1 = p[z][1], w0 = p[z][0];
    theta = rng.uniform() * (w0 + w1) < w1 ? 1 : 0;
  }
  double summary() const { return 2.0 * z + theta; }
  double log_joint() const { return std::log(p[z][theta]); }
};

struct FailingModel {
  std::size_t calls = 0;
  std::size_t num_local_units() const { return 2; }
  void local_update(std::size_t, RandomStream&) {}
  void global_update(RandomStream&) {
    if (++calls == 4) throw NumericError("boom");
  }
  double summary() const { return 0.0; }
  double log_joint() const { return 0.0; }
};

static_assert(GibbsModel<OrderModel>);
static_assert(GibbsModel<TwoVariableModel>);

}  // namespace

TEST(ScanSchedule, Validation) {
  EXPECT_NO_THROW((ScanSchedule{3, 1}).validate(3));
  EXPECT_THROW((ScanSchedule{4, 1}).validate(3), DataError);
  EXPECT_THROW((ScanSchedule{0, 1}).validate(3), DataError);
  EXPECT_THROW((ScanSchedule{2, 2}).validate(3), DataError);
  EXPECT_NO_THROW((ScanSchedule{1, 3}).validate(3));
}

TEST(RunScan, SingleSiteAlternates) {
  OrderModel m;
  RandomStream rng(1);
  const auto trace = run_scan(m, ScanSchedule{1, 1}, 4, rng);
  EXPECT_EQ(m.log, "ztztztzt");
  ASSERT_EQ(trace.size(), 4u);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(trace.points[c].cycle, c + 1);
    EXPECT_EQ(trace.points[c].summary, static_cast<double>(c + 1));
  }
}

TEST(RunScan, FullSweepAndFractional) {
  OrderModel m;
  RandomStream rng(1);
  run_scan(m, ScanSchedule{3, 1}, 2, rng);
  EXPECT_EQ(m.log, "zzztzzzt");
  m.log.clear();
  run_scan(m, ScanSchedule{1, 2}, 2, rng);
  EXPECT_EQ(m.log, "zttztt");
}

TEST(RunScan, BurninIsNotRecorded) {
  OrderModel m;
  RandomStream rng(1);
  const auto trace = run_scan(m, ScanSchedule{1, 1}, 3, rng, 5);
  EXPECT_EQ(trace.size(), 3u);
  EXPECT_EQ(trace.points.front().summary, 6.0);
}

TEST(RunScan, SecondsNondecreasingAndCostsPositive) {
  OrderModel m;
  RandomStream rng(1);
  const auto trace = run_scan(m, ScanSchedule{2, 1}, 200, rng);
  for (std::size_t c = 1; c < trace.size(); ++c) EXPECT_GE(trace.points[c].seconds, trace.points[c - 1].seconds);
  EXPECT_GT(trace.w_z, 0.0);
  EXPECT_GT(trace.w_theta, 0.0);
}

TEST(RunScan, FakeClockTiming) {
  double t = 0.0;
  TimedModel m{&t, 0.001, 0.1};
  RandomStream rng(2);
  ScanOptions<TimedModel> opts;
  opts.cycles = 50;
  const auto trace = run_scan(m, ScanSchedule{4, 1}, opts, rng, nullptr, FakeClock{&t});
  EXPECT_NEAR(trace.w_z, 0.001, 1e-12);
  EXPECT_NEAR(trace.w_theta, 0.1, 1e-12);
  EXPECT_NEAR(trace.points.back().seconds, 50 * (4 * 0.001 + 0.1), 1e-9);
}

TEST(RunScan, BudgetStopsAtFirstCyclePastBudget) {
  double t = 0.0;
  TimedModel m{&t, 0.01, 0.05};
  RandomStream rng(2);
  ScanOptions<TimedModel> opts;
  opts.budget_seconds = 1.0;
  const auto trace = run_scan(m, ScanSchedule{5, 1}, opts, rng, nullptr, FakeClock{&t});
  // Each cycle costs 0.1 s: ten cycles reach the budget.
  EXPECT_EQ(trace.size(), 10u);
}

TEST(RunScan, ObserverTimeExcluded) {
  double t = 0.0;
  TimedModel m{&t, 0.01, 0.05};
  RandomStream rng(2);
  ScanOptions<TimedModel> opts;
  opts.cycles = 5;
  int seen = 0;
  opts.observer = [&](const TimedModel&, const TracePoint&) {
    t += 100.0;
    ++seen;
  };
  const auto trace = run_scan(m, ScanSchedule{5, 1}, opts, rng, nullptr, FakeClock{&t});
  EXPECT_EQ(seen, 5);
  EXPECT_NEAR(trace.points.back().seconds, 0.5, 1e-9);
}

TEST(RunScan, FailureCarriesCycle) {
  FailingModel m;
  RandomStream rng(3);
  try {
    run_scan(m, ScanSchedule{1, 1}, 10, rng, 1);
    FAIL() << "expected ScanFailure";
  } catch (const ScanFailure& e) {
    EXPECT_EQ(e.cycle(), 3u);  // burn-in cycle 0, recorded cycles 1..; fourth global fails
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

TEST(RunScan, BitReproducible) {
  TwoVariableModel a, b;
  RandomStream ra(9), rb(9);
  const auto ta = run_scan(a, ScanSchedule{1, 1}, 1000, ra);
  const auto tb = run_scan(b, ScanSchedule{1, 1}, 1000, rb);
  EXPECT_EQ(ta.summaries(), tb.summaries());
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.theta, b.theta);
}

TEST(RunScan, SystematicScanMatchesJoint) {
  TwoVariableModel m;
  RandomStream rng(4);
  const auto trace = run_scan(m, ScanSchedule{1, 1}, 100000, rng, 100);
  std::vector<double> freq(4, 0.0);
  for (double s : trace.summaries()) freq[static_cast<std::size_t>(s)] += 1.0 / trace.size();
  const std::vector<double> truth{0.1, 0.2, 0.3, 0.4};
  EXPECT_LT(testing_support::total_variation(freq, truth), 0.01);
}

TEST(IndexSelector, CyclicPartitionsEpoch) {
  IndexSelector sel(IndexPolicy::CyclicPermutation, 4);
  RandomStream rng(5);
  for (int epoch = 0; epoch < 10; ++epoch) {
    auto a = sel.next(2, rng), b = sel.next(2, rng);
    std::set<std::size_t> all(a.begin(), a.end());
    all.insert(b.begin(), b.end());
    EXPECT_EQ(all, (std::set<std::size_t>{0, 1, 2, 3}));
  }
}

TEST(IndexSelector, CyclicWraparoundPadsFromNextEpoch) {
  IndexSelector sel(IndexPolicy::CyclicPermutation, 5);
  RandomStream rng(6);
  std::vector<std::size_t> seen;
  for (int call = 0; call < 3; ++call) {
    const auto b = sel.next(2, rng);
    ASSERT_EQ(b.size(), 2u);
    seen.insert(seen.end(), b.begin(), b.end());
  }
  // First five come from one permutation; the sixth opens the next epoch.
  std::set<std::size_t> first(seen.begin(), seen.begin() + 5);
  EXPECT_EQ(first.size(), 5u);
  std::set<std::size_t> all(seen.begin(), seen.end());
  EXPECT_EQ(all.size(), 5u);
  // The following two calls finish the second epoch: together with the sixth
  // index they cover only four more units, and the union of the epoch is 5.
  auto c = sel.next(2, rng), d = sel.next(2, rng);
  std::set<std::size_t> second{seen[5], c[0], c[1], d[0], d[1]};
  EXPECT_EQ(second.size(), 5u);
}

TEST(IndexSelector, UniformSingleUnit) {
  IndexSelector sel(IndexPolicy::UniformWithReplacement, 1);
  RandomStream rng(7);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sel.next(1, rng), std::vector<std::size_t>{0});
}

TEST(IndexSelector, RejectsOversizedBatch) {
  IndexSelector sel(IndexPolicy::CyclicPermutation, 3);
  RandomStream rng(7);
  EXPECT_THROW(sel.next(4, rng), DataError);
  EXPECT_THROW(IndexSelector(IndexPolicy::CyclicPermutation, 0), DataError);
}
