#include "msf/featsel.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace msf {

namespace {

// Columns of `points` are observations. Returns the nearest other column for each column.
std::vector<Index> nearest_neighbours(const Eigen::MatrixXd& points) {
  const Index m = points.cols();
  const Index p = points.rows();
  std::vector<Index> nn(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index best_j = -1;
    const double* xi = points.col(i).data();
    for (Index j = 0; j < m; ++j) {
      if (j == i) continue;
      const double* xj = points.col(j).data();
      double d = 0.0;
      Index c = 0;
      for (; c < p && d <= best; ++c) {
        const double diff = xi[c] - xj[c];
        d += diff * diff;
      }
      if (c == p && d < best) {
        best = d;
        best_j = j;
      }
    }
    nn[static_cast<std::size_t>(i)] = best_j;
  }
  return nn;
}

}  // namespace

double delta_test(const Eigen::Ref<const Eigen::MatrixXd>& inputs, const Eigen::Ref<const Eigen::MatrixXd>& outputs) {
  const Index m = inputs.rows();
  if (m < 2) throw std::invalid_argument("Delta test needs at least two rows");
  if (outputs.rows() != m) throw std::invalid_argument("Delta test inputs and outputs differ in row count");
  if (outputs.cols() < 1) throw std::invalid_argument("Delta test needs at least one output");
  const Eigen::MatrixXd points = inputs.transpose();
  const auto nn = nearest_neighbours(points);
  double acc = 0.0;
  for (Index i = 0; i < m; ++i) acc += (outputs.row(i) - outputs.row(nn[static_cast<std::size_t>(i)])).squaredNorm();
  return acc / (2.0 * static_cast<double>(m) * static_cast<double>(outputs.cols()));
}

LagSelection forward_backward_search(std::span<const int> candidates, const SubsetCriterion& criterion,
                                     SelectionLedger* ledger) {
  if (candidates.empty()) throw std::invalid_argument("no candidate lags");
  SelectionLedger local;
  SelectionLedger& led = ledger ? *ledger : local;
  led = {};

  auto eval = [&](std::vector<int> subset) {
    std::sort(subset.begin(), subset.end());
    ++led.evaluations;
    return std::pair{criterion(subset), subset};
  };

  std::vector<int> current;
  double value = std::numeric_limits<double>::infinity();
  for (int lag : candidates) {
    auto [v, s] = eval({lag});
    if (v < value) {
      value = v;
      current = s;
    }
  }
  if (current.empty()) current = {candidates.front()};
  led.evaluations_per_sweep.push_back(led.evaluations);
  led.accepted_values.push_back(value);

  for (;;) {
    const std::size_t before = led.evaluations;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_set;
    for (int lag : candidates) {
      if (std::find(current.begin(), current.end(), lag) != current.end()) continue;
      auto next = current;
      next.push_back(lag);
      auto [v, s] = eval(next);
      if (v < best) {
        best = v;
        best_set = std::move(s);
      }
    }
    if (current.size() > 1) {
      for (int lag : current) {
        std::vector<int> next;
        for (int other : current)
          if (other != lag) next.push_back(other);
        auto [v, s] = eval(next);
        if (v < best) {
          best = v;
          best_set = std::move(s);
        }
      }
    }
    led.evaluations_per_sweep.push_back(led.evaluations - before);
    if (!(best < value)) break;
    value = best;
    current = std::move(best_set);
    led.accepted_values.push_back(value);
  }
  return {current, value};
}

LagSelection forward_backward_select(std::span<const double> series, std::span<const int> candidate_lags,
                                     std::span<const int> target_offsets, SelectionLedger* ledger) {
  if (candidate_lags.empty()) throw std::invalid_argument("no candidate lags");
  for (int lag : candidate_lags)
    if (lag < 1 || lag > kMaxEmbeddingOrder)
      throw std::invalid_argument("candidate lag " + std::to_string(lag) + " outside 1.." +
                                  std::to_string(kMaxEmbeddingOrder));
  const auto full = build_lag_dataset(series, candidate_lags, target_offsets);
  if (full.rows() < 2) throw std::invalid_argument("lag selection needs at least two complete windows");

  std::vector<Index> column_of(kMaxEmbeddingOrder + 1, -1);
  for (std::size_t c = 0; c < candidate_lags.size(); ++c)
    column_of[static_cast<std::size_t>(candidate_lags[c])] = static_cast<Index>(c);

  const SubsetCriterion criterion = [&](std::span<const int> lags) {
    Eigen::MatrixXd sub(full.rows(), static_cast<Index>(lags.size()));
    for (std::size_t c = 0; c < lags.size(); ++c)
      sub.col(static_cast<Index>(c)) = full.inputs.col(column_of[static_cast<std::size_t>(lags[c])]);
    return delta_test(sub, full.targets);
  };
  return forward_backward_search(candidate_lags, criterion, ledger);
}

std::vector<int> candidate_lags(std::size_t length, int max_target_offset, int max_order, int min_rows) {
  const auto n = static_cast<long long>(length);
  const long long fit = n - max_target_offset - min_rows + 1;
  const int order = static_cast<int>(std::clamp<long long>(fit, 1, max_order));
  return offset_range(1, order);
}

}  // namespace msf
