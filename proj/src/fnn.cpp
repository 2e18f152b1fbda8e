#include "msf/fnn.hpp"

namespace msf {

HiddenSelection select_hidden_aic(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                  std::span<const int> candidates, const TrainConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("no hidden-unit candidates");
  HiddenSelection best;
  double best_aic = std::numeric_limits<double>::infinity();
  bool found = false;
  std::string last_error;
  for (int hidden : candidates) {
    const NetworkShape shape{inputs.cols(), hidden, targets.cols()};
    TrainConfig c = cfg;
    c.seed = derive_seed(cfg.seed, "hidden", hidden);
    try {
      auto net = train_lm<double>(inputs, targets, shape, c);
      const double aic = network_aic(net.report.final_mse, inputs.rows(), targets.cols(), shape.parameter_count());
      best.scores.emplace_back(hidden, aic);
      if (!found || aic < best_aic || (aic == best_aic && hidden < best.shape.n_hidden)) {
        best_aic = aic;
        best.shape = shape;
        best.network = std::move(net);
        found = true;
      }
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  if (!found) throw std::runtime_error("every hidden-size candidate failed: " + last_error);
  return best;
}

std::vector<std::pair<Index, Index>> fold_ranges(Index rows, int k) {
  if (k < 1) throw std::invalid_argument("fold count must be positive");
  if (rows < k) throw std::invalid_argument("need at least as many rows as folds");
  std::vector<std::pair<Index, Index>> out;
  const Index base = rows / k;
  const Index extra = rows % k;
  Index start = 0;
  for (int f = 0; f < k; ++f) {
    const Index len = base + (f < extra ? 1 : 0);
    out.emplace_back(start, start + len);
    start += len;
  }
  return out;
}

double kfold_cv(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, int k, const NetworkShape& shape,
                const TrainConfig& cfg) {
  if (inputs.rows() != targets.rows()) throw std::invalid_argument("inputs and targets differ in row count");
  const auto folds = fold_ranges(inputs.rows(), k);
  double total = 0.0;
  for (int f = 0; f < k; ++f) {
    const auto [lo, hi] = folds[static_cast<std::size_t>(f)];
    const Index val_rows = hi - lo;
    const Index train_rows = inputs.rows() - val_rows;
    Eigen::MatrixXd train_x(train_rows, inputs.cols()), train_y(train_rows, targets.cols());
    train_x << inputs.topRows(lo), inputs.bottomRows(inputs.rows() - hi);
    train_y << targets.topRows(lo), targets.bottomRows(targets.rows() - hi);

    double fold_mse;
    if (train_rows == 0) {
      fold_mse = targets.middleRows(lo, val_rows).squaredNorm() / static_cast<double>(val_rows * targets.cols());
    } else {
      TrainConfig c = cfg;
      c.seed = derive_seed(cfg.seed, "fold", f);
      const auto net = train_lm<double>(train_x, train_y, shape, c);
      const Eigen::MatrixXd pred = forward_batch<double>(net.params, inputs.middleRows(lo, val_rows));
      fold_mse = (pred - targets.middleRows(lo, val_rows)).squaredNorm() /
                 static_cast<double>(val_rows * targets.cols());
    }
    total += fold_mse;
  }
  return total / k;
}

HiddenSelection select_hidden_cv(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                 std::span<const int> candidates, int folds, const TrainConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("no hidden-unit candidates");
  HiddenSelection best;
  double best_score = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int hidden : candidates) {
    const NetworkShape shape{inputs.cols(), hidden, targets.cols()};
    TrainConfig c = cfg;
    c.seed = derive_seed(cfg.seed, "hidden", hidden);
    try {
      const double score = kfold_cv(inputs, targets, folds, shape, c);
      best.scores.emplace_back(hidden, score);
      if (!found || score < best_score) {
        best_score = score;
        best.shape = shape;
        found = true;
      }
    } catch (const std::exception&) {
    }
  }
  if (!found) throw std::runtime_error("every hidden-size candidate failed cross-validation");
  TrainConfig c = cfg;
  c.seed = derive_seed(cfg.seed, "hidden", best.shape.n_hidden);
  best.network = train_lm<double>(inputs, targets, best.shape, c);
  return best;
}

}  // namespace msf
