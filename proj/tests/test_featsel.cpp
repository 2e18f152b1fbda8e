#include "msf/featsel.hpp"

#include "msf/datagen.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace msf;

namespace {

// Independent O(M^2) oracle without early exit.
double delta_oracle(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Index m = x.rows();
  double total = 0.0;
  for (Index i = 0; i < m; ++i) {
    Index best = -1;
    double best_d = 0.0;
    for (Index j = 0; j < m; ++j) {
      if (j == i) continue;
      const double d = (x.row(i) - x.row(j)).squaredNorm();
      if (best < 0 || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    total += (y.row(i) - y.row(best)).squaredNorm() / static_cast<double>(y.cols());
  }
  return total / (2.0 * static_cast<double>(m));
}

}  // namespace

TEST(DeltaTest, IdenticalOutputsGiveZero) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 3);
  EXPECT_EQ(delta_test(x, Eigen::MatrixXd::Constant(20, 2, 0.7)), 0.0);
}

TEST(DeltaTest, DuplicatedRowsGiveZero) {
  Eigen::MatrixXd x(4, 1), y(4, 1);
  x << 1, 1, 5, 5;
  y << 2, 2, 9, 9;
  EXPECT_EQ(delta_test(x, y), 0.0);
}

TEST(DeltaTest, HandCase) {
  Eigen::MatrixXd x(3, 1), y(3, 1);
  x << 0, 1, 10;
  y << 0, 1, 5;
  EXPECT_DOUBLE_EQ(delta_test(x, y), 3.0);
}

TEST(DeltaTest, RejectsSingleRow) {
  EXPECT_THROW(delta_test(Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Ones(1, 1)), std::invalid_argument);
}

TEST(DeltaTest, MatchesBruteForceOracle) {
  for (int trial = 0; trial < 10; ++trial) {
    std::srand(static_cast<unsigned>(trial + 1));
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 1 + trial % 4);
    Eigen::MatrixXd y = Eigen::MatrixXd::Random(40, 1 + trial % 3);
    EXPECT_NEAR(delta_test(x, y), delta_oracle(x, y), 1e-14);
  }
}

TEST(DeltaTest, RowPermutationInvariance) {
  std::srand(7);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 2);
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(30, 2);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(30);
  perm.setIdentity();
  std::mt19937 rng(5);
  std::shuffle(perm.indices().data(), perm.indices().data() + 30, rng);
  EXPECT_NEAR(delta_test(perm * x, perm * y), delta_test(x, y), 1e-13);
}

TEST(DeltaTest, QuadraticInOutputScale) {
  std::srand(9);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(25, 2);
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(25, 3);
  EXPECT_NEAR(delta_test(x, 3.0 * y), 9.0 * delta_test(x, y), 1e-12);
}

TEST(ForwardBackward, LogisticKeepsLagOne) {
  const auto s = gen_logistic({0.3, 300});
  const auto lags = offset_range(1, 15);
  const std::vector<int> target{1};
  const auto sel = forward_backward_select(s.view(), lags, target);
  EXPECT_NE(std::find(sel.lags.begin(), sel.lags.end(), 1), sel.lags.end());

  // Lag 1 alone beats every other single lag on the same rows.
  const auto full = build_lag_dataset(s.view(), lags, target);
  const double at_one = delta_test(full.inputs.col(0), full.targets);
  for (Index c = 1; c < 15; ++c) EXPECT_LT(at_one, delta_test(full.inputs.col(c), full.targets));
}

TEST(ForwardBackward, SingleCandidate) {
  const auto s = gen_logistic({0.2, 100});
  const std::vector<int> only{4}, target{1};
  EXPECT_EQ(forward_backward_select(s.view(), only, target).lags, only);
}

TEST(ForwardBackward, NoiseTerminatesWithinBudget) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  std::vector<double> v(250);
  for (auto& x : v) x = n01(rng);
  const auto lags = offset_range(1, 15);
  const std::vector<int> target{1, 2};
  SelectionLedger ledger;
  const auto sel = forward_backward_select(v, lags, target, &ledger);
  EXPECT_FALSE(sel.lags.empty());
  EXPECT_LE(sel.lags.size(), 15u);
  for (auto count : ledger.evaluations_per_sweep) EXPECT_LE(count, 15u * 16u);
  for (std::size_t i = 1; i < ledger.accepted_values.size(); ++i)
    EXPECT_LT(ledger.accepted_values[i], ledger.accepted_values[i - 1]);
}

TEST(ForwardBackward, ReachesLocalOptimum) {
  const std::vector<int> cand{1, 2, 3, 4, 5};
  // Criterion with a known optimum at {2, 4}.
  auto crit = [](std::span<const int> s) {
    double v = 10.0;
    for (int lag : s) v += (lag == 2 || lag == 4) ? -3.0 : 1.0;
    return v;
  };
  const auto sel = forward_backward_search(cand, crit);
  EXPECT_EQ(sel.lags, (std::vector<int>{2, 4}));
  EXPECT_DOUBLE_EQ(sel.criterion_value, 4.0);
}

TEST(CandidateLags, ShrinksForShortSeries) {
  EXPECT_EQ(candidate_lags(500, 18).size(), 15u);
  const auto short_set = candidate_lags(40, 18);
  EXPECT_FALSE(short_set.empty());
  EXPECT_LT(short_set.size(), 15u);
}
