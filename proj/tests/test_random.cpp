#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "adagibbs/error.hpp"
#include "adagibbs/random.hpp"
#include "test_support.hpp"

using namespace adagibbs;
using testing_support::draws;
using testing_support::moments;

namespace {

constexpr std::size_t kDraws = 200000;

// Mean and variance of N(mu, sigma^2) restricted to [0, inf).
std::pair<double, double> truncated_above_zero(double mu, double sigma) {
  const double a = -mu / sigma;
  const double lam = testing_support::std_normal_pdf(a) / testing_support::std_normal_sf(a);
  const double mean = mu + sigma * lam;
  const double var = sigma * sigma * (1.0 + a * lam - lam * lam);
  return {mean, var};
}

}  // namespace

TEST(RandomStream, SameKeyReplaysSameSequence) {
  RandomStream a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs |= x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(RandomStream, UniformOpenNeverHitsEndpoints) {
  RandomStream rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

class TruncatedNormalMoments : public ::testing::TestWithParam<double> {};

TEST_P(TruncatedNormalMoments, MatchesAnalyticUpperHalf) {
  const double mu = GetParam();
  RandomStream rng(7);
  const auto x = draws(kDraws, [&] { return sample_truncated_normal(mu, 1.0, HalfLine::NonNegative, rng); });
  const auto [mean, var] = truncated_above_zero(mu, 1.0);
  const auto m = moments(x);
  for (double v : x) ASSERT_GE(v, 0.0);
  EXPECT_NEAR(m.mean, mean, 5.0 * std::sqrt(var / kDraws));
  EXPECT_NEAR(m.var, var, 0.02 * var);
}

TEST_P(TruncatedNormalMoments, LowerHalfMirrorsUpperHalf) {
  const double mu = GetParam();
  RandomStream rng(8);
  const auto x = draws(kDraws, [&] { return sample_truncated_normal(-mu, 1.0, HalfLine::NonPositive, rng); });
  const auto [mean, var] = truncated_above_zero(mu, 1.0);
  const auto m = moments(x);
  for (double v : x) ASSERT_LE(v, 0.0);
  EXPECT_NEAR(m.mean, -mean, 5.0 * std::sqrt(var / kDraws));
  EXPECT_NEAR(m.var, var, 0.02 * var);
}

// -8 exercises the rejection branch far in the tail.
INSTANTIATE_TEST_SUITE_P(Locations, TruncatedNormalMoments, ::testing::Values(0.0, 2.0, -1.5, -4.0, -8.0));

TEST(TruncatedNormal, ExtremeTailStaysFinite) {
  RandomStream rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_truncated_normal(-40.0, 1.0, HalfLine::NonNegative, rng);
    ASSERT_TRUE(std::isfinite(x));
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
}

TEST(TruncatedNormal, RejectsBadScale) {
  RandomStream rng(3);
  EXPECT_THROW(sample_truncated_normal(0.0, 0.0, HalfLine::NonNegative, rng), NumericError);
}

TEST(InverseGaussian, Moments) {
  for (auto [mu, lam] : {std::pair{1.0, 1.0}, std::pair{0.3, 5.0}, std::pair{4.0, 0.5}}) {
    RandomStream rng(11);
    const auto m = moments(draws(kDraws, [&] { return sample_inverse_gaussian(mu, lam, rng); }));
    const double var = mu * mu * mu / lam;
    EXPECT_NEAR(m.mean, mu, 5.0 * std::sqrt(var / kDraws)) << mu << " " << lam;
    // Heavy right tail for large mu^3/lambda; variance tolerance is looser.
    EXPECT_NEAR(m.var, var, 0.06 * var) << mu << " " << lam;
  }
}

TEST(InverseGaussian, HugeMeanStaysPositive) {
  RandomStream rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double x = sample_inverse_gaussian(1e12, 1.0, rng);
    ASSERT_GT(x, 0.0);
    ASSERT_TRUE(std::isfinite(x));
  }
}

TEST(InverseGamma, Moments) {
  RandomStream rng(5);
  const double a = 6.0, b = 2.0;
  const auto m = moments(draws(kDraws, [&] { return sample_inverse_gamma(a, b, rng); }));
  const double mean = b / (a - 1.0);
  const double var = b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0));
  EXPECT_NEAR(m.mean, mean, 5.0 * std::sqrt(var / kDraws));
  EXPECT_NEAR(m.var, var, 0.05 * var);
}

TEST(InverseGamma, RejectsNonPositive) {
  RandomStream rng(5);
  EXPECT_THROW(sample_inverse_gamma(0.0, 1.0, rng), NumericError);
  EXPECT_THROW(sample_inverse_gamma(1.0, -1.0, rng), NumericError);
}

TEST(Mvn, MeanAndCovariance) {
  RandomStream rng(9);
  VectorXd mean(3);
  mean << 1.0, -2.0, 0.5;
  MatrixXd cov(3, 3);
  cov << 2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 0.5;
  const std::size_t n = kDraws;
  VectorXd s = VectorXd::Zero(3);
  MatrixXd ss = MatrixXd::Zero(3, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const VectorXd x = sample_mvn(mean, cov, rng);
    s += x;
    ss += x * x.transpose();
  }
  const VectorXd m = s / static_cast<double>(n);
  const MatrixXd c = ss / static_cast<double>(n) - m * m.transpose();
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(m[i], mean[i], 5.0 * std::sqrt(cov(i, i) / n));
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(c(i, j), cov(i, j), 0.02);
  }
}

TEST(Mvn, NotPositiveDefiniteNamesPivot) {
  RandomStream rng(9);
  MatrixXd cov(2, 2);
  cov << 1.0, 2.0, 2.0, 1.0;
  try {
    sample_mvn(VectorXd::Zero(2), cov, rng);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
}

TEST(Dirichlet, MomentsPerComponent) {
  RandomStream rng(13);
  const std::vector<double> alpha{0.5, 2.0, 3.5};
  const double a0 = 6.0;
  std::vector<std::vector<double>> cols(3);
  for (std::size_t i = 0; i < kDraws; ++i) {
    const auto x = sample_dirichlet(alpha, rng);
    ASSERT_NEAR(std::accumulate(x.begin(), x.end(), 0.0), 1.0, 1e-12);
    for (int k = 0; k < 3; ++k) cols[k].push_back(x[k]);
  }
  for (int k = 0; k < 3; ++k) {
    const auto m = moments(cols[k]);
    const double mean = alpha[k] / a0;
    const double var = alpha[k] * (a0 - alpha[k]) / (a0 * a0 * (a0 + 1.0));
    EXPECT_NEAR(m.mean, mean, 5.0 * std::sqrt(var / kDraws));
    EXPECT_NEAR(m.var, var, 0.03 * var);
  }
}

TEST(Dirichlet, TinyConcentrationsStayNormalized) {
  RandomStream rng(17);
  const std::vector<double> alpha(50, 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const auto x = sample_dirichlet(alpha, rng);
    double s = 0.0;
    for (double v : x) {
      ASSERT_TRUE(std::isfinite(v));
      ASSERT_GE(v, 0.0);
      s += v;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Categorical, Frequencies) {
  RandomStream rng(19);
  const std::vector<double> w{1.0, 0.0, 3.0, 6.0};
  std::vector<double> freq(4, 0.0);
  for (std::size_t i = 0; i < kDraws; ++i) freq[sample_categorical(w, rng)] += 1.0;
  EXPECT_EQ(freq[1], 0.0);
  for (int k = 0; k < 4; ++k) {
    const double p = w[k] / 10.0;
    EXPECT_NEAR(freq[k] / kDraws, p, 5.0 * std::sqrt(p * (1 - p) / kDraws) + 1e-12);
  }
}

TEST(Categorical, LogWeightsSurviveHugeOffsets) {
  RandomStream rng(23);
  const std::vector<double> lw{-1000.0, -1000.0 + std::log(3.0), -std::numeric_limits<double>::infinity()};
  std::vector<double> freq(3, 0.0);
  for (std::size_t i = 0; i < kDraws; ++i) freq[sample_categorical_log(lw, rng)] += 1.0;
  EXPECT_EQ(freq[2], 0.0);
  EXPECT_NEAR(freq[1] / kDraws, 0.75, 5.0 * std::sqrt(0.75 * 0.25 / kDraws));
}

TEST(Categorical, AllZeroIsAnError) {
  RandomStream rng(1);
  const std::vector<double> w{0.0, 0.0};
  EXPECT_THROW(sample_categorical(w, rng), NumericError);
}
