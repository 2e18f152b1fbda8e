#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace msf {

using Index = Eigen::Index;

/// A named, finite sequence of real observations.
struct TimeSeries {
  std::string name;
  std::vector<double> values;

  TimeSeries() = default;
  TimeSeries(std::string name, std::vector<double> values);

  std::size_t size() const { return values.size(); }
  std::span<const double> view() const { return values; }
};

/// Throws std::invalid_argument unless the series is nonempty and all values are finite.
void validate(const TimeSeries& series);

struct SplitSpec {
  std::size_t holdout_len = 18;
};

/// Lag-window supervised dataset. Row r holds the window anchored at `anchors[r]`
/// (0-based index of the most recent observation in the window).
///
/// Lag offset L reads the value L-1 steps before the anchor, so lag 1 is the anchor
/// itself. Target offset o reads the value o steps after the anchor.
struct LagWindowDataset {
  Eigen::MatrixXd inputs;   // M x d
  Eigen::MatrixXd targets;  // M x s
  std::vector<int> lag_offsets;
  std::vector<int> target_offsets;
  std::vector<Index> anchors;

  Index rows() const { return inputs.rows(); }
};

struct ForecastResult {
  int horizon = 0;
  std::vector<double> predictions;
  std::string strategy;
  std::uint64_t seed = 0;
};

std::pair<TimeSeries, TimeSeries> split_holdout(const TimeSeries& series, const SplitSpec& spec);

/// First anchor usable with the given lag set (0-based).
inline Index first_anchor(std::span<const int> lag_offsets) {
  int span = 0;
  for (int lag : lag_offsets) span = std::max(span, lag);
  return span - 1;
}

/// Number of complete (window, target) rows that `values` admits.
Index lag_dataset_rows(std::size_t length, std::span<const int> lag_offsets,
                       std::span<const int> target_offsets);

LagWindowDataset build_lag_dataset(std::span<const double> values, std::span<const int> lag_offsets,
                                   std::span<const int> target_offsets);

inline LagWindowDataset build_lag_dataset(const TimeSeries& series, std::span<const int> lag_offsets,
                                          std::span<const int> target_offsets) {
  return build_lag_dataset(series.view(), lag_offsets, target_offsets);
}

/// Contiguous offsets first, first+1, ..., first+count-1.
std::vector<int> offset_range(int first, int count);

}  // namespace msf
