#pragma once

#include "msf/core.hpp"

#include <functional>
#include <span>
#include <vector>

namespace msf {

inline constexpr int kMaxEmbeddingOrder = 15;

struct LagSelection {
  std::vector<int> lags;  // ascending
  double criterion_value = 0.0;
};

/// Multi-output Delta test: (1 / 2M) * sum_i ||y_i - y_nn(i)||^2 / s, where nn(i) is the
/// Euclidean nearest neighbour of input row i among the other rows (lowest index on ties).
double delta_test(const Eigen::Ref<const Eigen::MatrixXd>& inputs, const Eigen::Ref<const Eigen::MatrixXd>& outputs);

/// Record of a forward-backward search.
struct SelectionLedger {
  std::size_t evaluations = 0;
  std::vector<std::size_t> evaluations_per_sweep;  // sweep 0 is the single-lag scan
  std::vector<double> accepted_values;             // criterion after each accepted move
};

using SubsetCriterion = std::function<double(std::span<const int>)>;

/// Forward-backward search over subsets of `candidates`: start from the best single
/// candidate, then repeatedly apply the single addition or removal that lowers the
/// criterion most, until no move strictly improves it. Ties go to the earlier move
/// (additions before removals, smaller lag first).
LagSelection forward_backward_search(std::span<const int> candidates, const SubsetCriterion& criterion,
                                     SelectionLedger* ledger = nullptr);

/// Lag selection for the given target offsets using the Delta test. All subsets are scored
/// on the same rows (windows complete for the largest candidate lag).
LagSelection forward_backward_select(std::span<const double> series, std::span<const int> candidate_lags,
                                     std::span<const int> target_offsets, SelectionLedger* ledger = nullptr);

/// Candidate set {1..d} for a series, shrunk when the series is too short to leave at least
/// `min_rows` complete windows at the full order.
std::vector<int> candidate_lags(std::size_t length, int max_target_offset, int max_order = kMaxEmbeddingOrder,
                                int min_rows = 10);

}  // namespace msf
