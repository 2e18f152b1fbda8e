#include "msf/strategies.hpp"

#include "msf/random.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace msf {

int BinaryMask::popcount() const { return static_cast<int>(std::count(bits.begin(), bits.end(), 1)); }

std::string BinaryMask::to_string() const {
  std::string out;
  out.reserve(bits.size());
  for (auto b : bits) out.push_back(b ? '1' : '0');
  return out;
}

BinaryMask BinaryMask::parse(std::string_view text) {
  BinaryMask mask;
  for (char c : text) {
    if (c != '0' && c != '1') throw std::invalid_argument("mask must contain only 0 and 1");
    mask.bits.push_back(c == '1');
  }
  return mask;
}

int HorizonPartition::horizon() const { return std::accumulate(segments.begin(), segments.end(), 0); }

int HorizonPartition::first_offset(std::size_t j) const {
  return 1 + std::accumulate(segments.begin(), segments.begin() + static_cast<std::ptrdiff_t>(j), 0);
}

std::vector<int> segmentation_points(const BinaryMask& mask) {
  std::vector<int> points;
  for (std::size_t i = 0; i < mask.bits.size(); ++i)
    if (mask.bits[i]) points.push_back(static_cast<int>(i) + 1);
  return points;
}

HorizonPartition decode_partition(const BinaryMask& mask, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (mask.size() != static_cast<std::size_t>(horizon - 1))
    throw std::invalid_argument("mask length " + std::to_string(mask.size()) + " does not match horizon " +
                                std::to_string(horizon));
  HorizonPartition out;
  int previous = 0;
  for (int point : segmentation_points(mask)) {
    out.segments.push_back(point - previous);
    previous = point;
  }
  out.segments.push_back(horizon - previous);
  return out;
}

BinaryMask encode_partition(const HorizonPartition& partition) {
  const int horizon = partition.horizon();
  if (partition.segments.empty() || horizon < 1) throw std::invalid_argument("empty partition");
  BinaryMask mask;
  mask.bits.assign(static_cast<std::size_t>(horizon - 1), 0);
  int point = 0;
  for (std::size_t j = 0; j + 1 < partition.segments.size(); ++j) {
    if (partition.segments[j] < 1) throw std::invalid_argument("partition segments must be positive");
    point += partition.segments[j];
    mask.bits[static_cast<std::size_t>(point - 1)] = 1;
  }
  if (partition.segments.back() < 1) throw std::invalid_argument("partition segments must be positive");
  return mask;
}

HorizonPartition mismo_partition(int s, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (s < 1 || s > horizon)
    throw std::invalid_argument("MISMO block size " + std::to_string(s) + " outside 1.." + std::to_string(horizon));
  HorizonPartition out;
  out.segments.assign(static_cast<std::size_t>(horizon / s), s);
  if (horizon % s) out.segments.push_back(horizon % s);
  return out;
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::iterated: return "iterated";
    case StrategyKind::direct: return "direct";
    case StrategyKind::mimo: return "mimo";
    case StrategyKind::mismo: return "mismo";
    case StrategyKind::partitioned: return "partitioned";
  }
  return "unknown";
}

std::shared_ptr<const SegmentModel> SegmentCache::find(const Key& key) const {
  std::lock_guard lock(mutex_);
  const auto it = models_.find(key);
  if (it == models_.end()) return nullptr;
  ++hits_;
  return it->second;
}

std::shared_ptr<const SegmentModel> SegmentCache::insert(const Key& key, SegmentModel model) {
  std::lock_guard lock(mutex_);
  auto [it, inserted] = models_.try_emplace(key, nullptr);
  if (inserted) it->second = std::make_shared<const SegmentModel>(std::move(model));
  return it->second;
}

std::size_t SegmentCache::size() const {
  std::lock_guard lock(mutex_);
  return models_.size();
}

std::size_t SegmentCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::uint64_t fingerprint(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h ^ bits);
  }
  return mix64(h ^ values.size());
}

std::uint64_t segment_seed(std::uint64_t context_seed, int first_offset, int length) {
  return derive_seed(context_seed, "segment", first_offset, length);
}

namespace {

SegmentModel fit_segment_uncached(std::span<const double> values, int first_offset, int length,
                                  const FitContext& ctx) {
  const auto& st = ctx.settings;
  const auto targets = offset_range(first_offset, length);
  const int last_offset = first_offset + length - 1;
  const auto candidates = candidate_lags(values.size(), last_offset, st.max_lag, st.min_rows);

  SegmentModel model;
  model.first_offset = first_offset;
  model.length = length;
  model.seed = segment_seed(ctx.seed, first_offset, length);
  model.lags = forward_backward_select(values, candidates, targets);

  const auto ds = build_lag_dataset(values, model.lags.lags, targets);
  TrainConfig train = st.train;
  train.seed = model.seed;
  auto selection = st.hidden_selection == HiddenSelectionMethod::aic
                       ? select_hidden_aic(ds.inputs, ds.targets, st.hidden_candidates, train)
                       : select_hidden_cv(ds.inputs, ds.targets, st.hidden_candidates, st.cv_folds, train);
  model.shape = selection.shape;
  model.params = std::move(selection.network.params);
  model.report = std::move(selection.network.report);
  return model;
}

}  // namespace

SegmentModel fit_segment(std::span<const double> values, int first_offset, int length, const FitContext& ctx) {
  if (first_offset < 1 || length < 1) throw std::invalid_argument("invalid horizon segment");
  if (!ctx.cache) return fit_segment_uncached(values, first_offset, length, ctx);
  const SegmentCache::Key key{fingerprint(values), first_offset, length, ctx.seed};
  if (auto hit = ctx.cache->find(key)) return *hit;
  return *ctx.cache->insert(key, fit_segment_uncached(values, first_offset, length, ctx));
}

std::vector<SegmentModel> fit_segments(std::span<const double> values, const HorizonPartition& partition,
                                       const FitContext& ctx) {
  std::vector<SegmentModel> out;
  out.reserve(partition.count());
  for (std::size_t j = 0; j < partition.count(); ++j) {
    try {
      out.push_back(fit_segment(values, partition.first_offset(j), partition.segments[j], ctx));
    } catch (const std::exception& e) {
      throw std::runtime_error("segment " + std::to_string(j + 1) + " failed: " + e.what());
    }
  }
  return out;
}

StrategyModelSet fit_partitioned(const TimeSeries& estimation, const HorizonPartition& partition,
                                 const FitContext& ctx) {
  if (partition.segments.empty()) throw std::invalid_argument("empty partition");
  for (int s : partition.segments)
    if (s < 1) throw std::invalid_argument("partition segments must be positive");
  StrategyModelSet out;
  out.kind = StrategyKind::partitioned;
  out.tag = to_string(out.kind);
  out.partition = partition;
  out.seed = ctx.seed;
  out.prep = prepare_series(estimation.view(), ctx.settings.preprocess);
  out.segments = fit_segments(out.prep.values, partition, ctx);
  return out;
}

StrategyModelSet fit_strategy(const StrategySpec& spec, const TimeSeries& estimation, int horizon,
                              const FitContext& ctx) {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  StrategyModelSet out;
  switch (spec.kind) {
    case StrategyKind::iterated:
      out = fit_partitioned(estimation, HorizonPartition{{1}}, ctx);
      out.partition = HorizonPartition{{horizon}};
      break;
    case StrategyKind::direct:
      out = fit_partitioned(estimation, HorizonPartition{std::vector<int>(static_cast<std::size_t>(horizon), 1)}, ctx);
      break;
    case StrategyKind::mimo:
      out = fit_partitioned(estimation, HorizonPartition{{horizon}}, ctx);
      break;
    case StrategyKind::mismo:
      out = fit_partitioned(estimation, mismo_partition(spec.mismo_s, horizon), ctx);
      break;
    case StrategyKind::partitioned:
      if (spec.partition.horizon() != horizon) throw std::invalid_argument("partition does not cover the horizon");
      out = fit_partitioned(estimation, spec.partition, ctx);
      break;
  }
  out.kind = spec.kind;
  out.tag = to_string(spec.kind);
  return out;
}

namespace {

// Window reader over observed history followed by predictions.
class WindowBuffer {
 public:
  WindowBuffer(std::span<const double> history, ForecastAudit* audit)
      : values_(history.begin(), history.end()), observed_(history.size()), audit_(audit) {}

  Eigen::VectorXd window(std::span<const int> lags) {
    Eigen::VectorXd x(static_cast<Index>(lags.size()));
    for (std::size_t c = 0; c < lags.size(); ++c) {
      const auto lag = static_cast<std::size_t>(lags[c]);
      if (lag > values_.size()) throw std::invalid_argument("insufficient history for lag " + std::to_string(lag));
      const std::size_t idx = values_.size() - lag;
      if (audit_) ++(idx < observed_ ? audit_->observed_reads : audit_->predicted_reads);
      x(static_cast<Index>(c)) = values_[idx];
    }
    return x;
  }

  void push(double v) { values_.push_back(v); }

 private:
  std::vector<double> values_;
  std::size_t observed_;
  ForecastAudit* audit_;
};

}  // namespace

Eigen::VectorXd forecast_model_space(StrategyKind kind, std::span<const SegmentModel> segments, int horizon,
                                     std::span<const double> history, ForecastAudit* audit) {
  if (segments.empty()) throw std::invalid_argument("no sub-models to forecast with");
  WindowBuffer buffer(history, audit);
  Eigen::VectorXd out(horizon);
  if (kind == StrategyKind::iterated) {
    const auto& model = segments.front();
    for (int h = 0; h < horizon; ++h) {
      const double y = forward<double>(model.params, buffer.window(model.lags.lags))(0);
      out(h) = y;
      buffer.push(y);
    }
    return out;
  }
  Index pos = 0;
  for (const auto& model : segments) {
    if (model.first_offset != pos + 1) throw std::invalid_argument("sub-models do not tile the horizon");
    out.segment(pos, model.length) = forward<double>(model.params, buffer.window(model.lags.lags));
    pos += model.length;
  }
  if (pos != horizon) throw std::invalid_argument("sub-models do not cover the horizon");
  return out;
}

ForecastResult forecast(const StrategyModelSet& models, std::span<const double> history, ForecastAudit* audit) {
  const int horizon = models.horizon();
  std::vector<double> model_history(history.size());
  for (std::size_t i = 0; i < history.size(); ++i)
    model_history[i] = models.prep.to_model(history[i], static_cast<double>(i + 1));
  const Eigen::VectorXd pred = forecast_model_space(models.kind, models.segments, horizon, model_history, audit);

  ForecastResult out;
  out.horizon = horizon;
  out.strategy = models.tag;
  out.seed = models.seed;
  out.predictions.resize(static_cast<std::size_t>(horizon));
  const auto n = static_cast<double>(history.size());
  for (int h = 0; h < horizon; ++h) {
    out.predictions[static_cast<std::size_t>(h)] = models.prep.to_original(pred(h), n + h + 1);
    if (!std::isfinite(out.predictions[static_cast<std::size_t>(h)]))
      throw std::runtime_error("non-finite forecast at step " + std::to_string(h + 1));
  }
  return out;
}

}  // namespace msf
