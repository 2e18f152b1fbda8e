#include "msf/fnn.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace msf;

namespace {

FnnParams<double> random_params(const NetworkShape& s, std::uint64_t seed, double width = 1.0) {
  Rng rng(seed);
  return FnnParams<double>::random(s, rng, width);
}

void expect_strictly_decreasing(const TrainReport& r) {
  for (std::size_t i = 1; i < r.mse_trace.size(); ++i) EXPECT_LT(r.mse_trace[i], r.mse_trace[i - 1]);
}

}  // namespace

TEST(Forward, ZeroParametersGiveZeroOutput) {
  const auto p = FnnParams<double>::zeros({3, 4, 2});
  EXPECT_TRUE(forward<double>(p, Eigen::Vector3d(1, -2, 5)).isZero());
}

TEST(Forward, SingleHiddenUnitHandCase) {
  auto p = FnnParams<double>::zeros({1, 1, 1});
  p.output_weights(0, 0) = 2.0;
  p.output_biases(0) = 1.0;
  for (double x : {-3.0, 0.0, 7.5}) EXPECT_DOUBLE_EQ(forward<double>(p, Eigen::VectorXd::Constant(1, x))(0), 2.0);
}

TEST(Forward, AffineInOutputWeights) {
  const auto p = random_params({4, 6, 3}, 1);
  auto q = p;
  q.output_weights *= 2.0;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  const Eigen::VectorXd y = forward<double>(p, x);
  const Eigen::VectorXd y2 = forward<double>(q, x);
  EXPECT_LT((y2 - (2.0 * (y - p.output_biases) + p.output_biases)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Forward, ShapeMismatchIsRejected) {
  const auto p = random_params({2, 2, 1}, 2);
  EXPECT_THROW(forward<double>(p, Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST(Forward, FlattenRoundTrip) {
  const auto p = random_params({3, 4, 2}, 3);
  const auto q = FnnParams<double>::unflatten(p.shape(), p.flatten());
  EXPECT_EQ(q.flatten(), p.flatten());
}

TEST(Mse, HandCases) {
  EXPECT_DOUBLE_EQ(mse<double>(Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 0)), 2.5);
  EXPECT_EQ(mse<double>(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)), 0.0);
  EXPECT_DOUBLE_EQ(mse<double>(Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Constant(1, 1.0)), 4.0);
  EXPECT_THROW(mse<double>(Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)), std::invalid_argument);
}

TEST(Jacobian, OutputBiasAndWeightColumns) {
  const NetworkShape s{3, 4, 2};
  const auto p = random_params(s, 4);
  const Eigen::Vector3d x(0.2, -0.7, 1.1);
  const Eigen::MatrixXd j = jacobian<double>(p, x);
  const Eigen::VectorXd a = (p.hidden_weights * x + p.hidden_biases).unaryExpr([](double z) { return sigmoid(z); });
  for (Index h = 0; h < 2; ++h) {
    const Index base = s.hidden_parameter_count() + h * (s.n_hidden + 1);
    for (Index hh = 0; hh < 2; ++hh) {
      const Index bias_col = s.hidden_parameter_count() + hh * (s.n_hidden + 1) + s.n_hidden;
      EXPECT_EQ(j(h, bias_col), h == hh ? 1.0 : 0.0);
    }
    for (Index k = 0; k < s.n_hidden; ++k) EXPECT_DOUBLE_EQ(j(h, base + k), a(k));
  }
}

TEST(Jacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const NetworkShape s{1 + draw % 4, kHiddenCandidates[static_cast<std::size_t>(draw % 5)], 1 + draw % 3};
    const auto p = random_params(s, 1000 + static_cast<std::uint64_t>(draw));
    Eigen::VectorXd x(s.n_in);
    for (Index i = 0; i < x.size(); ++i) x(i) = u(rng);
    const Eigen::MatrixXd j = jacobian<double>(p, x);
    const Eigen::VectorXd theta = p.flatten();
    for (Index k = 0; k < theta.size(); ++k) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(k) += 1e-6;
      tm(k) -= 1e-6;
      const Eigen::VectorXd fd = (forward<double>(FnnParams<double>::unflatten(s, tp), x) -
                                  forward<double>(FnnParams<double>::unflatten(s, tm), x)) /
                                 2e-6;
      for (Index h = 0; h < s.n_out; ++h) {
        const double err = std::abs(fd(h) - j(h, k)) / std::max(1.0, std::abs(j(h, k)));
        worst = std::max(worst, err);
      }
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(LmStep, MatchesDenseNormalEquations) {
  const NetworkShape s{3, 4, 2};
  const auto p = random_params(s, 5);
  std::srand(5);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 3);
  const Eigen::MatrixXd t = Eigen::MatrixXd::Random(30, 2);
  const double lambda = 0.01;
  const Index np = s.parameter_count();
  Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(np, np);
  Eigen::VectorXd jte = Eigen::VectorXd::Zero(np);
  for (Index r = 0; r < x.rows(); ++r) {
    const Eigen::VectorXd xr = x.row(r).transpose();
    const Eigen::MatrixXd j = jacobian<double>(p, xr);
    const Eigen::VectorXd e = t.row(r).transpose() - forward<double>(p, xr);
    jtj += j.transpose() * j;
    jte += j.transpose() * e;
  }
  jtj.diagonal().array() += lambda;
  const Eigen::VectorXd dense = jtj.ldlt().solve(jte);
  const Eigen::VectorXd fast = lm_step<double>(p, x, t, lambda);
  EXPECT_LT((dense - fast).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, dense.cwiseAbs().maxCoeff()));
}

TEST(TrainLm, IdentityRegression) {
  Eigen::MatrixXd x(50, 1);
  for (Index i = 0; i < 50; ++i) x(i, 0) = static_cast<double>(i) / 49.0;
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.seed = 17;
  const auto net = train_lm<double>(x, x, {1, 2, 1}, cfg);
  EXPECT_LT(net.report.final_mse, 1e-3);
  EXPECT_LE(net.report.epochs_run, 200);
  expect_strictly_decreasing(net.report);
}

TEST(TrainLm, ConstantTargets) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 2);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(40, 1, 0.3);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  const auto net = train_lm<double>(x, t, {2, 2, 1}, cfg);
  EXPECT_LT(net.report.final_mse, 1e-10);
  expect_strictly_decreasing(net.report);
}

TEST(TrainLm, SameSeedIsBitIdentical) {
  std::srand(8);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(60, 2);
  Eigen::MatrixXd t = (x.col(0).array() * x.col(1).array()).matrix();
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.seed = 3;
  const auto a = train_lm<double>(x, t, {2, 4, 1}, cfg);
  const auto b = train_lm<double>(x, t, {2, 4, 1}, cfg);
  EXPECT_EQ(a.params.flatten(), b.params.flatten());
  EXPECT_EQ(a.report.mse_trace, b.report.mse_trace);
}

TEST(TrainLm, FloatScalar) {
  Eigen::MatrixXf x(40, 1);
  for (Index i = 0; i < 40; ++i) x(i, 0) = static_cast<float>(i) / 39.0f;
  Eigen::MatrixXf t = x.array().square().matrix();
  TrainConfig cfg;
  cfg.max_epochs = 100;
  const auto net = train_lm<float>(x, t, {1, 4, 1}, cfg);
  EXPECT_LT(net.report.final_mse, 1e-3);
  expect_strictly_decreasing(net.report);
}

TEST(Aic, HandValue) { EXPECT_NEAR(network_aic(0.01, 100, 1, 10), 100.0 * std::log(0.01) + 20.0, 1e-12); }

TEST(Aic, NearLinearPrefersSmallNetworks) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 0.05);
  Eigen::MatrixXd x(120, 1), t(120, 1);
  for (Index i = 0; i < 120; ++i) {
    x(i, 0) = static_cast<double>(i) / 119.0;
    t(i, 0) = 0.9 * x(i, 0) + noise(rng);
  }
  TrainConfig cfg;
  cfg.max_epochs = 200;
  const auto sel = select_hidden_aic(x, t, kHiddenCandidates, cfg);
  EXPECT_TRUE(sel.shape.n_hidden == 2 || sel.shape.n_hidden == 4) << sel.shape.n_hidden;
  for (const auto& [h, score] : sel.scores) EXPECT_TRUE(std::isfinite(score)) << h;
  expect_strictly_decreasing(sel.network.report);
}

TEST(Aic, SingleCandidate) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 1);
  const std::vector<int> only{4};
  TrainConfig cfg;
  cfg.max_epochs = 20;
  EXPECT_EQ(select_hidden_aic(x, x, only, cfg).shape.n_hidden, 4);
}

TEST(CrossValidation, FoldSizes) {
  const auto folds = fold_ranges(11, 5);
  std::vector<Index> sizes;
  for (auto [lo, hi] : folds) sizes.push_back(hi - lo);
  EXPECT_EQ(sizes, (std::vector<Index>{3, 2, 2, 2, 2}));
  EXPECT_EQ(folds.front().first, 0);
  EXPECT_EQ(folds.back().second, 11);
  for (std::size_t f = 1; f < folds.size(); ++f) EXPECT_EQ(folds[f].first, folds[f - 1].second);
}

TEST(CrossValidation, RejectsTooFewRows) { EXPECT_THROW(fold_ranges(3, 5), std::invalid_argument); }

TEST(CrossValidation, LeaveOneOut) {
  const auto folds = fold_ranges(7, 7);
  for (auto [lo, hi] : folds) EXPECT_EQ(hi - lo, 1);
}

TEST(CrossValidation, ConstantTargetsScoreNearZero) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(40, 1, 0.25);
  TrainConfig cfg;
  cfg.max_epochs = 100;
  EXPECT_LT(kfold_cv(x, t, 5, {1, 2, 1}, cfg), 1e-8);
}
