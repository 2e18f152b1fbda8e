#include "msf/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msf {

TimeSeries::TimeSeries(std::string name, std::vector<double> values)
    : name(std::move(name)), values(std::move(values)) {
  validate(*this);
}

void validate(const TimeSeries& series) {
  if (series.values.empty()) throw std::invalid_argument("series '" + series.name + "' is empty");
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    if (!std::isfinite(series.values[i]))
      throw std::invalid_argument("series '" + series.name + "' has a non-finite value at index " +
                                  std::to_string(i));
  }
}

std::pair<TimeSeries, TimeSeries> split_holdout(const TimeSeries& series, const SplitSpec& spec) {
  if (spec.holdout_len == 0) throw std::invalid_argument("holdout length must be positive");
  if (series.size() <= spec.holdout_len)
    throw std::invalid_argument("series '" + series.name + "' has length " + std::to_string(series.size()) +
                                ", needs more than the hold-out length " + std::to_string(spec.holdout_len));
  const auto cut = series.values.begin() + static_cast<std::ptrdiff_t>(series.size() - spec.holdout_len);
  TimeSeries estimation{series.name, {series.values.begin(), cut}};
  TimeSeries holdout{series.name, {cut, series.values.end()}};
  return {std::move(estimation), std::move(holdout)};
}

Index lag_dataset_rows(std::size_t length, std::span<const int> lag_offsets,
                       std::span<const int> target_offsets) {
  if (lag_offsets.empty() || target_offsets.empty()) return 0;
  const int max_lag = *std::max_element(lag_offsets.begin(), lag_offsets.end());
  const int max_target = *std::max_element(target_offsets.begin(), target_offsets.end());
  const Index rows = static_cast<Index>(length) - max_lag - max_target + 1;
  return std::max<Index>(rows, 0);
}

LagWindowDataset build_lag_dataset(std::span<const double> values, std::span<const int> lag_offsets,
                                   std::span<const int> target_offsets) {
  if (lag_offsets.empty()) throw std::invalid_argument("lag set is empty");
  if (target_offsets.empty()) throw std::invalid_argument("target set is empty");
  for (int lag : lag_offsets)
    if (lag < 1) throw std::invalid_argument("lag offsets must be positive");
  for (int off : target_offsets)
    if (off < 1) throw std::invalid_argument("target offsets must be positive");

  const Index rows = lag_dataset_rows(values.size(), lag_offsets, target_offsets);
  if (rows < 1)
    throw std::invalid_argument("series of length " + std::to_string(values.size()) +
                                " admits no complete lag window");

  LagWindowDataset ds;
  ds.lag_offsets.assign(lag_offsets.begin(), lag_offsets.end());
  ds.target_offsets.assign(target_offsets.begin(), target_offsets.end());
  ds.inputs.resize(rows, static_cast<Index>(lag_offsets.size()));
  ds.targets.resize(rows, static_cast<Index>(target_offsets.size()));
  ds.anchors.resize(static_cast<std::size_t>(rows));

  const Index anchor0 = first_anchor(lag_offsets);
  for (Index r = 0; r < rows; ++r) {
    const Index anchor = anchor0 + r;
    ds.anchors[static_cast<std::size_t>(r)] = anchor;
    for (std::size_t c = 0; c < lag_offsets.size(); ++c)
      ds.inputs(r, static_cast<Index>(c)) = values[static_cast<std::size_t>(anchor - lag_offsets[c] + 1)];
    for (std::size_t c = 0; c < target_offsets.size(); ++c)
      ds.targets(r, static_cast<Index>(c)) = values[static_cast<std::size_t>(anchor + target_offsets[c])];
  }
  return ds;
}

std::vector<int> offset_range(int first, int count) {
  std::vector<int> out(static_cast<std::size_t>(std::max(count, 0)));
  std::iota(out.begin(), out.end(), first);
  return out;
}

}  // namespace msf
