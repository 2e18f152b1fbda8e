#pragma once

#include "msf/core.hpp"
#include "msf/featsel.hpp"
#include "msf/fnn.hpp"
#include "msf/preprocess.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace msf {

/// H-1 segmentation bits; bit i (0-based) set means a cut between steps i+1 and i+2.
struct BinaryMask {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  int popcount() const;
  std::string to_string() const;
  static BinaryMask parse(std::string_view text);
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
  friend auto operator<=>(const BinaryMask&, const BinaryMask&) = default;
};

struct HorizonPartition {
  std::vector<int> segments;

  int horizon() const;
  std::size_t count() const { return segments.size(); }
  /// First target offset (1-based) of segment j.
  int first_offset(std::size_t j) const;
  friend bool operator==(const HorizonPartition&, const HorizonPartition&) = default;
};

/// 1-based indices i with p_i = 1.
std::vector<int> segmentation_points(const BinaryMask& mask);
HorizonPartition decode_partition(const BinaryMask& mask, int horizon);
BinaryMask encode_partition(const HorizonPartition& partition);
/// Segments (s, ..., s[, H mod s]).
HorizonPartition mismo_partition(int s, int horizon);

enum class StrategyKind { iterated, direct, mimo, mismo, partitioned };
std::string to_string(StrategyKind kind);

enum class HiddenSelectionMethod { aic, cross_validation };

struct FitSettings {
  TrainConfig train;
  std::vector<int> hidden_candidates{kHiddenCandidates.begin(), kHiddenCandidates.end()};
  HiddenSelectionMethod hidden_selection = HiddenSelectionMethod::aic;
  int cv_folds = 5;
  int max_lag = kMaxEmbeddingOrder;
  int min_rows = 10;
  PreprocessOptions preprocess;
};

/// One trained sub-model predicting target offsets first_offset .. first_offset+length-1.
struct SegmentModel {
  int first_offset = 1;
  int length = 1;
  LagSelection lags;
  NetworkShape shape;
  FnnParams<double> params;
  TrainReport report;
  std::uint64_t seed = 0;
};

/// Memo of fitted segment models keyed by (training data, segment, seed). Safe for
/// concurrent use; a cache must only be shared between contexts with identical settings.
class SegmentCache {
 public:
  using Key = std::tuple<std::uint64_t, int, int, std::uint64_t>;

  std::shared_ptr<const SegmentModel> find(const Key& key) const;
  std::shared_ptr<const SegmentModel> insert(const Key& key, SegmentModel model);
  std::size_t size() const;
  std::size_t hits() const;

 private:
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const SegmentModel>> models_;
  mutable std::size_t hits_ = 0;
};

struct FitContext {
  FitSettings settings;
  std::uint64_t seed = 0;
  std::shared_ptr<SegmentCache> cache;  // optional
};

/// Seed of the sub-model for a segment; shared by every strategy that uses the segment.
std::uint64_t segment_seed(std::uint64_t context_seed, int first_offset, int length);

/// Lag selection, hidden-size selection and LM training for one horizon segment on
/// model-space values.
SegmentModel fit_segment(std::span<const double> values, int first_offset, int length, const FitContext& ctx);
std::vector<SegmentModel> fit_segments(std::span<const double> values, const HorizonPartition& partition,
                                       const FitContext& ctx);

struct StrategyModelSet {
  StrategyKind kind = StrategyKind::mimo;
  std::string tag;
  HorizonPartition partition;
  std::vector<SegmentModel> segments;
  PreparedSeries prep;
  std::uint64_t seed = 0;

  int horizon() const { return partition.horizon(); }
};

StrategyModelSet fit_partitioned(const TimeSeries& estimation, const HorizonPartition& partition,
                                 const FitContext& ctx);

struct StrategySpec {
  StrategyKind kind = StrategyKind::mimo;
  int mismo_s = 0;              // mismo only
  HorizonPartition partition;  // partitioned only
};

StrategyModelSet fit_strategy(const StrategySpec& spec, const TimeSeries& estimation, int horizon,
                              const FitContext& ctx);

/// Counts of window reads during a forecast, split by whether the value was observed or
/// produced by an earlier prediction.
struct ForecastAudit {
  std::size_t observed_reads = 0;
  std::size_t predicted_reads = 0;
};

/// H-step forecast in model space from `history` (model-space values up to the origin).
Eigen::VectorXd forecast_model_space(StrategyKind kind, std::span<const SegmentModel> segments, int horizon,
                                     std::span<const double> history, ForecastAudit* audit = nullptr);

/// Forecast in original units. `history` is the observed series in original units starting at
/// the first estimation observation; the forecast origin is its last value.
ForecastResult forecast(const StrategyModelSet& models, std::span<const double> history,
                        ForecastAudit* audit = nullptr);

/// Fingerprint of the raw bytes of a value sequence.
std::uint64_t fingerprint(std::span<const double> values);

}  // namespace msf
