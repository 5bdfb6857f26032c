#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "adagibbs/diagnostics.hpp"
#include "adagibbs/random.hpp"
#include "test_support.hpp"

using namespace adagibbs;
using testing_support::ar1;

TEST(Autocorrelation, AlternatingSequenceBothModes) {
  const std::vector<double> x{1, -1, 1, -1, 1, -1};
  // Centered values are +-1; lag-1 products sum to -5, squares to 6.
  // PaperExact: (-5/5) / (6/5) = -5/6. Standard: -5/6.
  EXPECT_NEAR(autocorrelation(x, 1, AcfMode::PaperExact), -5.0 / 6.0, 1e-15);
  EXPECT_NEAR(autocorrelation(x, 1, AcfMode::Standard), -5.0 / 6.0, 1e-15);
  EXPECT_NEAR(autocorrelation(x, 2, AcfMode::PaperExact), (4.0 / 4.0) / (6.0 / 5.0), 1e-15);
  EXPECT_NEAR(autocorrelation(x, 2, AcfMode::Standard), 4.0 / 6.0, 1e-15);
}

TEST(Autocorrelation, LagZero) {
  RandomStream rng(1);
  std::vector<double> x(37);
  for (auto& v : x) v = rng.normal();
  const double n = static_cast<double>(x.size());
  EXPECT_NEAR(autocorrelation(x, 0, AcfMode::PaperExact), (n - 1.0) / n, 1e-14);
  EXPECT_NEAR(autocorrelation(x, 0, AcfMode::Standard), 1.0, 1e-14);
}

TEST(Autocorrelation, IidLagOneSmall) {
  RandomStream rng(2);
  std::vector<double> x(100000);
  for (auto& v : x) v = rng.normal();
  EXPECT_LT(std::abs(autocorrelation(x, 1)), 0.02);
}

TEST(Autocorrelation, ConstantSequenceIsDegenerate) {
  const std::vector<double> x(20, 3.5);
  EXPECT_THROW(autocorrelation(x, 1), DegenerateSeries);
  EXPECT_THROW(integrated_autocorrelation_time(x), DegenerateSeries);
  EXPECT_THROW(effective_sample_size(x), DegenerateSeries);
}

TEST(Autocorrelation, StandardSeriesBoundedByOne) {
  RandomStream rng(3);
  const auto x = ar1(2000, 0.95, rng);
  for (double r : autocorrelation_series(x, 400)) EXPECT_LE(std::abs(r), 1.0 + 1e-9);
}

TEST(TauInt, IidNearOne) {
  RandomStream rng(4);
  std::vector<double> x(50000);
  for (auto& v : x) v = rng.normal();
  const double tau = integrated_autocorrelation_time(x);
  EXPECT_GE(tau, 0.8);
  EXPECT_LE(tau, 1.2);
}

struct Ar1Case {
  double phi;
  std::size_t n;
  double tol;
};

class TauIntAr1 : public ::testing::TestWithParam<Ar1Case> {};

TEST_P(TauIntAr1, MatchesAnalytic) {
  const auto c = GetParam();
  RandomStream rng(100 + static_cast<std::uint64_t>(c.phi * 10));
  const auto x = ar1(c.n, c.phi, rng);
  const double expected = (1.0 + c.phi) / (1.0 - c.phi);
  EXPECT_NEAR(integrated_autocorrelation_time(x), expected, c.tol * expected);
}

INSTANTIATE_TEST_SUITE_P(Phis, TauIntAr1,
                         ::testing::Values(Ar1Case{0.3, 50000, 0.15}, Ar1Case{0.6, 50000, 0.15},
                                           Ar1Case{0.9, 200000, 0.20}));

TEST(TauInt, StopsAtFirstNegativeLag) {
  std::vector<double> x;
  for (int i = 0; i < 100; ++i) x.push_back(i % 2 ? 1.0 : -1.0);
  EXPECT_DOUBLE_EQ(integrated_autocorrelation_time(x), 1.0);
  EXPECT_GE(integrated_autocorrelation_time(x), kMinTauInt);
}

TEST(TauInt, RespectsTmaxAndPreconditions) {
  RandomStream rng(5);
  const auto x = ar1(1000, 0.9, rng);
  const double short_cap = integrated_autocorrelation_time(x, 1);
  EXPECT_NEAR(short_cap, 1.0 + 2.0 * autocorrelation(x, 1), 1e-12);
  EXPECT_THROW(integrated_autocorrelation_time(x, 1000), DataError);
  EXPECT_THROW(integrated_autocorrelation_time(std::vector<double>(9, 1.0)), DataError);
}

TEST(Ess, TimesTauIsN) {
  RandomStream rng(6);
  const auto x = ar1(40000, 0.6, rng);
  const double ess = effective_sample_size(x);
  const double tau = integrated_autocorrelation_time(x);
  EXPECT_DOUBLE_EQ(ess * tau, 40000.0);
  EXPECT_NEAR(ess, 10000.0, 1500.0);
  EXPECT_LE(ess, 40000.0 / kMinTauInt);
}

TEST(AsymptoticVariance, IidUnitCase) {
  RandomStream rng(7);
  std::vector<double> x(50000);
  for (auto& v : x) v = rng.normal();
  const double v = asymptotic_variance(x, 1, 1.0, 1.0, 2.0);
  EXPECT_NEAR(v, 1.0, 0.2);
  EXPECT_DOUBLE_EQ(asymptotic_variance(x, 1, 1.0, 1.0, 4.0), v / 2.0);
}

TEST(AsymptoticVariance, Ar1PluggedIn) {
  RandomStream rng(8);
  const double phi = 0.6;
  const auto x = ar1(50000, phi, rng);
  const double sigma2 = 1.0 / (1.0 - phi * phi);
  const double expected = sigma2 / 10.0 * (4 * 0.001 + 0.01) * 4.0;
  EXPECT_NEAR(asymptotic_variance(x, 4, 0.001, 0.01, 10.0), expected, 0.2 * expected);
}

// Averaged over replications, since one estimate has ~26% relative spread at 30 batches.
TEST(BatchMeans, IidMatchesSigma2OverN) {
  RandomStream rng(21);
  const std::size_t n = 3000, reps = 400;
  double acc = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    acc += batch_means_variance(x);
  }
  EXPECT_NEAR(acc / reps * n, 1.0, 0.06);
}

TEST(BatchMeans, Ar1MatchesSigma2TauOverN) {
  RandomStream rng(22);
  const double phi = 0.5;
  const std::size_t n = 30000, reps = 200;
  const double expected = 1.0 / (1.0 - phi * phi) * (1.0 + phi) / (1.0 - phi) / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t r = 0; r < reps; ++r) acc += batch_means_variance(ar1(n, phi, rng));
  EXPECT_NEAR(acc / reps / expected, 1.0, 0.08);
}

TEST(BatchMeans, DropsRemainderAtFront) {
  // 7 samples, 3 batches of 2: the leading 100 is ignored.
  const std::vector<double> x{100, 0, 0, 1, 1, 2, 2};
  // batch means 0, 1, 2 -> variance 1, divided by 3
  EXPECT_DOUBLE_EQ(batch_means_variance(x, 3), 1.0 / 3.0);
  EXPECT_THROW(batch_means_variance(x, 1), DataError);
  EXPECT_THROW(batch_means_variance(x, 8), DataError);
}

TEST(AsymptoticVariance, MonotoneInBatchSize) {
  RandomStream rng(9);
  const auto x = ar1(5000, 0.5, rng);
  double prev = 0.0;
  for (std::size_t m : {1, 2, 8, 64}) {
    const double v = asymptotic_variance(x, m, 1e-3, 1e-2, 1.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Epsr, IdenticalChainsBelowOne) {
  RandomStream rng(10);
  std::vector<double> c(200);
  for (auto& v : c) v = rng.normal();
  const std::vector<std::vector<double>> chains{c, c, c};
  EXPECT_NEAR(epsr(chains), std::sqrt(199.0 / 200.0), 1e-14);
}

TEST(Epsr, IidChainsNearOne) {
  RandomStream rng(11);
  std::vector<std::vector<double>> chains(3, std::vector<double>(10000));
  for (auto& c : chains)
    for (auto& v : c) v = rng.normal();
  const double r = epsr(chains);
  EXPECT_GE(r, 0.99);
  EXPECT_LE(r, 1.02);
}

TEST(Epsr, SeparatedChainsLarge) {
  RandomStream rng(12);
  std::vector<std::vector<double>> chains(2, std::vector<double>(100));
  for (std::size_t j = 0; j < 2; ++j)
    for (auto& v : chains[j]) v = 10.0 * static_cast<double>(j) + rng.normal();
  EXPECT_GT(epsr(chains), 3.0);
}

TEST(Epsr, AffineInvariant) {
  RandomStream rng(13);
  std::vector<std::vector<double>> chains(3, std::vector<double>(500));
  for (std::size_t j = 0; j < 3; ++j)
    for (auto& v : chains[j]) v = 0.1 * static_cast<double>(j) + rng.normal();
  auto moved = chains;
  for (auto& c : moved)
    for (auto& v : c) v = -3.0 * v + 7.0;
  EXPECT_NEAR(epsr(moved), epsr(chains), 1e-12);
}

TEST(Epsr, Preconditions) {
  const std::vector<std::vector<double>> one{std::vector<double>(20, 1.0)};
  EXPECT_THROW(epsr(one), DataError);
  const std::vector<std::vector<double>> constant(2, std::vector<double>(20, 1.0));
  EXPECT_THROW(epsr(constant), DegenerateSeries);
  const std::vector<std::vector<double>> ragged{std::vector<double>(20, 1.0), std::vector<double>(21, 1.0)};
  EXPECT_THROW(epsr(ragged), DataError);
}

TEST(Diagnose, ReportFields) {
  RandomStream rng(14);
  const auto x = ar1(4000, 0.3, rng);
  const auto r = diagnose(x);
  EXPECT_EQ(r.n, 4000u);
  EXPECT_DOUBLE_EQ(r.ess * r.tau_int, 4000.0);
  EXPECT_DOUBLE_EQ(r.sigma2, sample_variance(x));
  EXPECT_FALSE(r.epsr.has_value());
}
