#include "msf/metrics.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include <random>

using namespace msf;

TEST(Mape, HandCases) {
  EXPECT_EQ(mape(std::vector<double>{3, 4}, std::vector<double>{3, 4}), 0.0);
  EXPECT_NEAR(mape(std::vector<double>{100, 200}, std::vector<double>{110, 180}), 10.0, 1e-9);
  EXPECT_NEAR(mape(std::vector<double>{100}, std::vector<double>{0}), 100.0, 1e-9);
  EXPECT_THROW(mape(std::vector<double>{0}, std::vector<double>{1}), std::domain_error);
}

TEST(Smape, HandCases) {
  EXPECT_EQ(smape(std::vector<double>{3}, std::vector<double>{3}), 0.0);
  EXPECT_NEAR(smape(std::vector<double>{100}, std::vector<double>{110}), 10.0 / 210.0 * 100.0, 1e-9);
  EXPECT_NEAR(smape(std::vector<double>{100}, std::vector<double>{110}), 4.7619, 5e-5);
  EXPECT_NEAR(smape(std::vector<double>{1}, std::vector<double>{0}), 100.0, 1e-9);
  EXPECT_THROW(smape(std::vector<double>{-1}, std::vector<double>{0.5}), std::domain_error);
}

TEST(Smape, StandardVariant) {
  EXPECT_NEAR(smape(std::vector<double>{100}, std::vector<double>{110}, true), 2.0 * 10.0 / 210.0 * 100.0, 1e-9);
  EXPECT_NEAR(smape(std::vector<double>{-1}, std::vector<double>{1}, true), 200.0, 1e-9);
}

TEST(Mase, HandCases) {
  const std::vector<double> insample{1, 2, 3, 4};
  EXPECT_EQ(naive_mae(insample), 1.0);
  const SeriesMatrix a{{5}}, f{{4.5}}, in{insample};
  EXPECT_NEAR(mase_h(a, f, in, 1), 0.5, 1e-9);
  EXPECT_EQ(mase_h(a, a, in, 1), 0.0);
  EXPECT_NEAR(mase_h(a, SeriesMatrix{{6}}, in, 1), 1.0, 1e-12);
  EXPECT_THROW(naive_mae(std::vector<double>{2, 2, 2}), std::domain_error);
}

TEST(Measures, ZeroIffExact) {
  const std::vector<double> a{1.5, 2.5, 3.5}, s{1.0, 1.0, 1.0};
  std::vector<double> f = a;
  EXPECT_EQ(mape(a, f), 0.0);
  EXPECT_EQ(smape(a, f), 0.0);
  EXPECT_EQ(mase(a, f, s), 0.0);
  f[1] += 1e-6;
  EXPECT_GT(mape(a, f), 0.0);
  EXPECT_GT(smape(a, f), 0.0);
  EXPECT_GT(mase(a, f, s), 0.0);
}

TEST(Measures, ScaleInvariance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  SeriesMatrix a(4, std::vector<double>(3)), f = a, in(4, std::vector<double>(20));
  for (std::size_t m = 0; m < 4; ++m) {
    for (auto& x : a[m]) x = u(rng);
    for (auto& x : f[m]) x = u(rng);
    for (auto& x : in[m]) x = u(rng);
  }
  for (double c : {0.001, 3.7, 1e4}) {
    auto scale = [c](SeriesMatrix m) {
      for (auto& row : m)
        for (auto& x : row) x *= c;
      return m;
    };
    for (int h = 1; h <= 3; ++h) {
      EXPECT_NEAR(mape_h(scale(a), scale(f), h), mape_h(a, f, h), 1e-9);
      EXPECT_NEAR(smape_h(scale(a), scale(f), h), smape_h(a, f, h), 1e-9);
      EXPECT_NEAR(mase_h(scale(a), scale(f), scale(in), h), mase_h(a, f, in, h), 1e-9);
    }
  }
}

TEST(HorizonAverage, Ranges) {
  const std::vector<double> v{1, 2, 3};
  EXPECT_EQ(average_over_horizons(v, 1, 1), 1.0);
  EXPECT_EQ(average_over_horizons(v, 1, 3), 2.0);
  std::vector<double> w(18);
  for (int i = 0; i < 18; ++i) w[static_cast<std::size_t>(i)] = i * i;
  EXPECT_NEAR(average_over_horizons(w, 1, 12), 506.0 / 12.0, 1e-12);
  EXPECT_THROW(average_over_horizons(v, 2, 1), std::invalid_argument);
  EXPECT_THROW(average_over_horizons(v, 1, 4), std::invalid_argument);
  EXPECT_THROW(average_over_horizons(v, 0, 1), std::invalid_argument);
}

TEST(Ranks, StrictlyBetter) {
  const auto t = average_rank({std::vector<double>(18, 1.0), std::vector<double>(18, 2.0)});
  EXPECT_EQ(t.average, (std::vector<double>{1.0, 2.0}));
}

TEST(Ranks, TiesShareMeanRank) {
  const auto t = average_rank({std::vector<double>(18, 1.0), std::vector<double>(18, 1.0)});
  EXPECT_EQ(t.average, (std::vector<double>{1.5, 1.5}));
}

TEST(Ranks, ThreeStrategies) {
  const auto t = average_rank({std::vector<double>(5, 1.0), std::vector<double>(5, 2.0), std::vector<double>(5, 3.0)});
  EXPECT_EQ(t.average, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Ranks, PermutationPropertyOnRandomScores) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 4);
  std::vector<std::vector<double>> s(6, std::vector<double>(18));
  for (auto& row : s)
    for (auto& x : row) x = u(rng);
  const auto t = average_rank(s);
  for (const auto& ranks : t.per_horizon) EXPECT_NEAR(std::accumulate(ranks.begin(), ranks.end(), 0.0), 21.0, 1e-12);
}

TEST(Anova, IdenticalGroups) {
  const auto r = anova_oneway({{1, 2, 3}, {1, 2, 3}});
  EXPECT_NEAR(r.f, 0.0, 1e-15);
  EXPECT_FALSE(r.significant);
}

TEST(Anova, ZeroWithinVariance) {
  const auto r = anova_oneway({{0, 0, 0}, {1, 1, 1}});
  EXPECT_TRUE(std::isinf(r.f));
  EXPECT_TRUE(r.significant);
}

TEST(Anova, HandDecomposition) {
  const auto r = anova_oneway({{1, 2, 3}, {2, 3, 4}});
  EXPECT_NEAR(r.ss_between, 1.5, 1e-12);
  EXPECT_NEAR(r.ss_within, 4.0, 1e-12);
  EXPECT_NEAR(r.f, 1.5, 1e-10);
  EXPECT_EQ(r.df_between, 1);
  EXPECT_EQ(r.df_within, 4);
}

TEST(Anova, TwoGroupsMatchSquaredT) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(7), b(9);
    for (auto& x : a) x = n01(rng);
    for (auto& x : b) x = n01(rng) + 0.5;
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    const double ma = mean(a), mb = mean(b);
    double ss = 0.0;
    for (double x : a) ss += (x - ma) * (x - ma);
    for (double x : b) ss += (x - mb) * (x - mb);
    const double pooled = ss / (a.size() + b.size() - 2);
    const double t = (ma - mb) / std::sqrt(pooled * (1.0 / a.size() + 1.0 / b.size()));
    EXPECT_NEAR(anova_oneway({a, b}).f, t * t, 1e-10);
  }
}

TEST(Anova, PValueMatchesReferenceDistribution) {
  const auto r = anova_oneway({{1, 2, 3, 4}, {2, 3, 5, 6}, {5, 6, 7, 9}});
  const boost::math::fisher_f dist(r.df_between, r.df_within);
  EXPECT_NEAR(r.p, boost::math::cdf(boost::math::complement(dist, r.f)), 1e-8);
}

TEST(IncompleteBeta, MatchesReference) {
  for (double a : {0.5, 1.0, 2.5, 7.0, 30.0})
    for (double b : {0.5, 1.5, 4.0, 12.0})
      for (double x : {0.001, 0.1, 0.35, 0.5, 0.8, 0.999})
        EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-8) << a << ' ' << b << ' ' << x;
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
}
