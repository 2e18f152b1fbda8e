#include "msf/preprocess.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace msf;

TEST(MinMax, HandCase) {
  const std::vector<double> v{0, 5, 10};
  EXPECT_EQ(minmax_apply(minmax_fit(v), v), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(MinMax, RoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 80.0);
  std::vector<double> v(200);
  for (auto& x : v) x = u(rng);
  const auto p = minmax_fit(v);
  const auto back = minmax_invert(p, minmax_apply(p, v));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-12 * std::max(1.0, std::abs(v[i])));
}

TEST(MinMax, ConstantIsRejected) { EXPECT_THROW(minmax_fit(std::vector<double>{3, 3, 3}), std::invalid_argument); }

TEST(MannKendall, IncreasingFour) {
  const auto r = mann_kendall(std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(r.s, 6);
}

TEST(MannKendall, ConstantHasNoTrend) {
  const auto r = mann_kendall(std::vector<double>(10, 2.0));
  EXPECT_EQ(r.s, 0);
  EXPECT_FALSE(r.trending);
}

TEST(MannKendall, LinearRampTrends) {
  std::vector<double> v;
  for (int i = 1; i <= 30; ++i) v.push_back(i);
  const auto r = mann_kendall(v);
  // S = 435, var = 30*29*65/18 = 3141.67, z = 434 / sqrt(var)
  EXPECT_EQ(r.s, 435);
  EXPECT_NEAR(r.z, 434.0 / std::sqrt(30.0 * 29.0 * 65.0 / 18.0), 1e-12);
  EXPECT_TRUE(r.trending);
}

TEST(MannKendall, ReversalFlipsSign) {
  std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
  const auto a = mann_kendall(v);
  std::reverse(v.begin(), v.end());
  EXPECT_EQ(mann_kendall(v).s, -a.s);
}

TEST(MannKendall, TooShortIsRejected) {
  EXPECT_THROW(mann_kendall(std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Detrend, ExactLine) {
  std::vector<double> v;
  for (int t = 1; t <= 20; ++t) v.push_back(2.0 * t + 1.0);
  const auto d = detrend_poly(v, 1);
  EXPECT_NEAR(d.trend.coefficients(0), 1.0, 1e-10);
  EXPECT_NEAR(d.trend.coefficients(1), 2.0, 1e-10);
  for (double r : d.residuals) EXPECT_NEAR(r, 0.0, 1e-10);
}

TEST(Detrend, ConstantDegreeZero) {
  const auto d = detrend_poly(std::vector<double>(8, 5.0), 0);
  EXPECT_NEAR(d.trend.coefficients(0), 5.0, 1e-12);
  for (double r : d.residuals) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(Detrend, NoisyLineMatchesNormalEquations) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> v;
  for (int t = 1; t <= 50; ++t) v.push_back(0.5 * t - 3.0 + noise(rng));
  const auto d = detrend_poly(v, 1);

  double st = 0, stt = 0, sy = 0, sty = 0;
  for (int t = 1; t <= 50; ++t) {
    st += t;
    stt += t * t;
    sy += v[t - 1];
    sty += t * v[t - 1];
  }
  const double det = 50 * stt - st * st;
  EXPECT_NEAR(d.trend.coefficients(0), (stt * sy - st * sty) / det, 1e-9);
  EXPECT_NEAR(d.trend.coefficients(1), (50 * sty - st * sy) / det, 1e-9);
  double sum = 0;
  for (double r : d.residuals) sum += r;
  EXPECT_NEAR(sum, 0.0, 1e-9);
  const auto back = retrend(d.trend, d.residuals);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-10 * std::max(1.0, std::abs(v[i])));
}

TEST(Detrend, RankDeficientIsRejected) {
  EXPECT_THROW(detrend_poly(std::vector<double>{1, 2, 3}, 2), std::invalid_argument);
}

TEST(Prepare, PipelineInversion) {
  std::vector<double> v;
  for (int t = 1; t <= 120; ++t) v.push_back(100.0 + 0.8 * t + 5.0 * std::sin(0.3 * t));
  const auto p = prepare_series(v);
  ASSERT_TRUE(p.trend.has_value());
  for (std::size_t i = 0; i < v.size(); ++i)
    EXPECT_NEAR(p.to_original(p.values[i], static_cast<double>(i + 1)), v[i], 1e-8 * std::abs(v[i]));
}

TEST(Prepare, HoldoutDoesNotInfluenceScaling) {
  std::vector<double> v;
  for (int t = 1; t <= 80; ++t) v.push_back(std::sin(0.5 * t) + 0.01 * t);
  std::vector<double> est(v.begin(), v.end() - 18);
  const auto a = prepare_series(est);
  std::vector<double> perturbed = v;
  for (std::size_t i = v.size() - 18; i < v.size(); ++i) perturbed[i] += 100.0;
  const auto b = prepare_series(std::span<const double>(perturbed).first(est.size()));
  EXPECT_EQ(a.scale.min, b.scale.min);
  EXPECT_EQ(a.scale.max, b.scale.max);
  EXPECT_EQ(a.values, b.values);
}
