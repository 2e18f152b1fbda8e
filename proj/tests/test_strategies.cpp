#include "msf/strategies.hpp"

#include "msf/datagen.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace msf;

namespace {

BinaryMask mask_of(std::initializer_list<int> bits) {
  BinaryMask m;
  for (int b : bits) m.bits.push_back(static_cast<std::uint8_t>(b));
  return m;
}

FitContext quick_context(std::uint64_t seed = 7) {
  FitContext ctx;
  ctx.settings.train.max_epochs = 15;
  ctx.settings.hidden_candidates = {2, 4};
  ctx.settings.max_lag = 6;
  ctx.seed = seed;
  ctx.cache = std::make_shared<SegmentCache>();
  return ctx;
}

// A segment whose outputs are the constants value, value+1, ...
SegmentModel constant_segment(int first, int length, double value) {
  SegmentModel m;
  m.first_offset = first;
  m.length = length;
  m.lags.lags = {1};
  m.params = FnnParams<double>::zeros({1, 1, length});
  for (int k = 0; k < length; ++k) m.params.output_biases(k) = value + k;
  return m;
}

// sigma(eps x) is affine to O(eps^3): output ~ x.
SegmentModel identity_segment() {
  constexpr double eps = 1e-4;
  SegmentModel m;
  m.lags.lags = {1};
  m.params = FnnParams<double>::zeros({1, 1, 1});
  m.params.hidden_weights(0, 0) = eps;
  m.params.output_weights(0, 0) = 4.0 / eps;
  m.params.output_biases(0) = -2.0 / eps;
  return m;
}

}  // namespace

TEST(Partition, WorkedExample) {
  const auto p = decode_partition(mask_of({0, 0, 1, 0, 0, 0, 0, 1, 0}), 10);
  EXPECT_EQ(p.segments, (std::vector<int>{3, 5, 2}));
  EXPECT_EQ(p.count(), 3u);
  EXPECT_EQ(p.first_offset(1), 4);
}

TEST(Partition, AllZeroIsMimoAllOneIsDirect) {
  BinaryMask zeros, ones;
  zeros.bits.assign(17, 0);
  ones.bits.assign(17, 1);
  EXPECT_EQ(decode_partition(zeros, 18).segments, std::vector<int>{18});
  EXPECT_EQ(decode_partition(ones, 18).segments, std::vector<int>(18, 1));
}

TEST(Partition, WrongLengthIsRejected) {
  EXPECT_THROW(decode_partition(mask_of({1, 0}), 10), std::invalid_argument);
}

TEST(Partition, FuzzSumCountAndRoundTrip) {
  std::mt19937_64 rng(1);
  for (int h = 2; h <= 18; ++h) {
    for (int trial = 0; trial < 1000; ++trial) {
      BinaryMask m;
      for (int i = 0; i < h - 1; ++i) m.bits.push_back(static_cast<std::uint8_t>(rng() & 1));
      const auto p = decode_partition(m, h);
      ASSERT_EQ(p.horizon(), h);
      ASSERT_EQ(static_cast<int>(p.count()), m.popcount() + 1);
      ASSERT_EQ(encode_partition(p), m);
    }
  }
}

TEST(Partition, SegmentationPoints) {
  EXPECT_EQ(segmentation_points(mask_of({0, 0, 1, 0, 0, 0, 0, 1, 0})), (std::vector<int>{3, 8}));
}

TEST(Mismo, DivisibleAndRemainder) {
  EXPECT_EQ(mismo_partition(6, 18).segments, (std::vector<int>{6, 6, 6}));
  EXPECT_EQ(mismo_partition(5, 18).segments, (std::vector<int>{5, 5, 5, 3}));
  EXPECT_THROW(mismo_partition(19, 18), std::invalid_argument);
  EXPECT_THROW(mismo_partition(0, 18), std::invalid_argument);
}

TEST(ForecastAssembly, SegmentsFillTheirPositions) {
  std::vector<SegmentModel> segs{constant_segment(1, 3, 10), constant_segment(4, 5, 20), constant_segment(9, 2, 30)};
  const std::vector<double> history{0.1, 0.2, 0.3};
  ForecastAudit audit;
  const Eigen::VectorXd y = forecast_model_space(StrategyKind::partitioned, segs, 10, history, &audit);
  const std::vector<double> expected{10, 11, 12, 20, 21, 22, 23, 24, 30, 31};
  for (int i = 0; i < 10; ++i) EXPECT_EQ(y(i), expected[static_cast<std::size_t>(i)]);
  EXPECT_EQ(audit.predicted_reads, 0u);
  EXPECT_EQ(audit.observed_reads, 3u);
}

TEST(ForecastAssembly, IteratedIdentityRepeatsLastObservation) {
  std::vector<SegmentModel> segs{identity_segment()};
  const std::vector<double> history{0.4, 0.7, 0.25};
  ForecastAudit audit;
  const Eigen::VectorXd y = forecast_model_space(StrategyKind::iterated, segs, 18, history, &audit);
  for (int i = 0; i < 18; ++i) EXPECT_NEAR(y(i), 0.25, 1e-8);
  EXPECT_EQ(audit.observed_reads, 1u);
  EXPECT_EQ(audit.predicted_reads, 17u);
}

TEST(ForecastAssembly, InsufficientHistoryIsRejected) {
  auto seg = constant_segment(1, 2, 0);
  seg.lags.lags = {5};
  std::vector<SegmentModel> segs{seg};
  const std::vector<double> history{1, 2};
  EXPECT_THROW(forecast_model_space(StrategyKind::mimo, segs, 2, history), std::invalid_argument);
}

class FittedStrategies : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    series_ = new TimeSeries(gen_logistic({0.2, 160}));
  }
  static void TearDownTestSuite() { delete series_; }
  static TimeSeries* series_;
};
TimeSeries* FittedStrategies::series_ = nullptr;

TEST_F(FittedStrategies, PartitionedSubModelTargets) {
  const auto ctx = quick_context();
  const auto set = fit_partitioned(*series_, HorizonPartition{{3, 5, 2}}, ctx);
  ASSERT_EQ(set.segments.size(), 3u);
  EXPECT_EQ(set.segments[1].first_offset, 4);
  EXPECT_EQ(set.segments[1].length, 5);
  EXPECT_EQ(set.segments[1].params.output_biases.size(), 5);
  for (const auto& seg : set.segments)
    for (std::size_t i = 1; i < seg.report.mse_trace.size(); ++i)
      EXPECT_LT(seg.report.mse_trace[i], seg.report.mse_trace[i - 1]);
}

TEST_F(FittedStrategies, SubModelCounts) {
  const auto ctx = quick_context();
  EXPECT_EQ(fit_strategy({StrategyKind::mimo}, *series_, 18, ctx).segments.size(), 1u);
  EXPECT_EQ(fit_strategy({StrategyKind::iterated}, *series_, 18, ctx).segments.size(), 1u);
  EXPECT_EQ(fit_strategy({StrategyKind::direct}, *series_, 18, ctx).segments.size(), 18u);
  const auto mismo = fit_strategy({StrategyKind::mismo, 6}, *series_, 18, ctx);
  EXPECT_EQ(mismo.partition.segments, (std::vector<int>{6, 6, 6}));
  EXPECT_EQ(mismo.segments.size(), 3u);
  EXPECT_THROW(fit_strategy({StrategyKind::mismo, 19}, *series_, 18, ctx), std::invalid_argument);
}

TEST_F(FittedStrategies, SpecialCasesAreBitEqual) {
  const int h = 6;
  BinaryMask zeros, ones;
  zeros.bits.assign(h - 1, 0);
  ones.bits.assign(h - 1, 1);
  // Separate caches so equality comes from the seeding rule, not from shared memo entries.
  const auto mimo = forecast(fit_strategy({StrategyKind::mimo}, *series_, h, quick_context()), series_->view());
  const auto part0 = forecast(
      fit_strategy({StrategyKind::partitioned, 0, decode_partition(zeros, h)}, *series_, h, quick_context()),
      series_->view());
  EXPECT_EQ(mimo.predictions, part0.predictions);
  const auto direct = forecast(fit_strategy({StrategyKind::direct}, *series_, h, quick_context()), series_->view());
  const auto part1 = forecast(
      fit_strategy({StrategyKind::partitioned, 0, decode_partition(ones, h)}, *series_, h, quick_context()),
      series_->view());
  EXPECT_EQ(direct.predictions, part1.predictions);
}

TEST_F(FittedStrategies, NonIteratedForecastsReadOnlyObservations) {
  const auto ctx = quick_context();
  for (auto kind : {StrategyKind::direct, StrategyKind::mimo}) {
    ForecastAudit audit;
    const auto fc = forecast(fit_strategy({kind}, *series_, 6, ctx), series_->view(), &audit);
    EXPECT_EQ(audit.predicted_reads, 0u);
    EXPECT_GT(audit.observed_reads, 0u);
    EXPECT_EQ(fc.predictions.size(), 6u);
  }
  ForecastAudit audit;
  forecast(fit_strategy({StrategyKind::iterated}, *series_, 6, ctx), series_->view(), &audit);
  EXPECT_GT(audit.predicted_reads, 0u);
}

TEST_F(FittedStrategies, ForecastsAreInOriginalUnits) {
  std::vector<double> shifted;
  for (double v : series_->values) shifted.push_back(1000.0 + 50.0 * v);
  const TimeSeries big("big", shifted);
  const auto fc = forecast(fit_strategy({StrategyKind::mimo}, big, 6, quick_context()), big.view());
  for (double v : fc.predictions) {
    EXPECT_GT(v, 900.0);
    EXPECT_LT(v, 1150.0);
  }
}

TEST_F(FittedStrategies, SegmentCacheReusesModels) {
  const auto ctx = quick_context();
  fit_strategy({StrategyKind::direct}, *series_, 6, ctx);
  const auto before = ctx.cache->size();
  fit_strategy({StrategyKind::mismo, 1}, *series_, 6, ctx);
  EXPECT_EQ(ctx.cache->size(), before);
  EXPECT_GE(ctx.cache->hits(), 6u);
}
