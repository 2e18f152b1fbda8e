#pragma once

#include "msf/core.hpp"
#include "msf/metrics.hpp"
#include "msf/optimizers.hpp"
#include "msf/strategies.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace msf {

/// Strategy names accepted in configs: iterated, direct, mimo, mismo, pso-mismo, ga-mismo.
enum class Method { iterated, direct, mimo, mismo, pso_mismo, ga_mismo };
std::string to_string(Method m);
Method parse_method(const std::string& name);

enum class GaSelectionRule { automatic, roulette, top_percent };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string dataset_preset = "logistic-20";  // empty when reading CSV
  std::vector<int> preset_rows;                // empty means all rows
  std::filesystem::path dataset_csv;
  std::string dataset_name;  // defaults to the preset family or the CSV stem

  std::vector<Method> methods{Method::iterated, Method::direct,   Method::mimo,
                              Method::mismo,    Method::pso_mismo, Method::ga_mismo};
  int horizon = 18;
  std::size_t holdout_len = 18;
  int repetitions = 10;
  std::vector<int> mismo_sizes{1, 2, 3, 6, 9, 18};

  SwarmConfig pso;
  GaConfig ga;
  GaSelectionRule ga_selection = GaSelectionRule::automatic;
  bool fitness_cache = false;
  FitSettings fit;

  std::uint64_t seed = 2024;
  std::filesystem::path out_dir = "out";
  int workers = 1;

  std::string profile = "paper";
};

/// Paper-scale or desk-scale defaults.
ExperimentConfig profile_config(const std::string& profile);

/// Applies `key = value` lines on top of `base`. Lines starting with '#' are comments.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);
/// Canonical `key = value` rendering; parse_config(render_config(c), {}) reproduces c.
std::string render_config(const ExperimentConfig& cfg);

std::vector<TimeSeries> load_dataset(const ExperimentConfig& cfg);
std::string dataset_label(const ExperimentConfig& cfg);

struct RunRecord {
  std::string dataset;
  std::string series;
  Method method = Method::mimo;
  int repetition = 0;
  std::uint64_t seed = 0;  // sub-model context seed
  std::uint64_t optimizer_seed = 0;

  bool ok = false;
  std::string error;

  std::vector<double> actual;
  std::vector<double> forecast;
  double mase_scale = 0.0;

  HorizonPartition partition;
  std::optional<BinaryMask> mask;  // heuristic strategies
  int mismo_s = 0;
  double fitness = 0.0;  // validation MSE of the chosen partition (mismo and heuristics)
  std::vector<std::vector<int>> lags;
  std::vector<int> hidden;
  std::uint64_t artifact_hash = 0;  // digest of every fitted quantity

  std::optional<ConvergenceTrace> trace;
  std::size_t evaluations = 0;
  double wall_seconds = 0.0;
  double cpu_seconds = 0.0;
};

/// Digest of scaling, trend, lags, weights and partition of a fitted model set.
std::uint64_t artifact_hash(const StrategyModelSet& models);

/// All strategies for one (series, repetition). Failures are recorded, not thrown.
std::vector<RunRecord> run_series(const TimeSeries& series, const std::string& dataset, int repetition,
                                  const ExperimentConfig& cfg);

struct AggregateRow {
  std::string dataset;
  std::string strategy;
  Measure measure = Measure::mape;
  int h = 1;
  double mean = 0.0;
  double stddev = 0.0;
};

struct RankRow {
  std::string dataset;
  Measure measure = Measure::mape;
  std::string strategy;
  int h = 1;
  double rank = 0.0;
};

struct AnovaRow {
  std::string dataset;
  Measure measure = Measure::mape;
  int h = 1;
  AnovaResult result;
};

struct SummaryRow {
  std::string dataset;
  std::string strategy;
  double mse = 0.0;  // mean hold-out MSE over series and repetitions
  std::map<Measure, double> average_rank;
  double mean_rank = 0.0;  // mean of the per-measure average ranks
};

/// Per-repetition scores, one entry per (dataset, strategy, repetition, measure).
struct ScoreRow {
  std::string dataset;
  std::string strategy;
  int repetition = 0;
  HorizonScores scores;
};

struct Aggregates {
  std::vector<ScoreRow> scores;
  std::vector<AggregateRow> metrics;
  std::vector<RankRow> ranks;
  std::vector<AnovaRow> anova;
  std::vector<SummaryRow> summary;
};

/// Minimal per-forecast data needed to rebuild every aggregate table.
struct ForecastRow {
  std::string dataset;
  std::string series;
  std::string strategy;
  int repetition = 0;
  int h = 1;
  double actual = 0.0;
  double forecast = 0.0;
  double mase_scale = 0.0;
};

std::vector<ForecastRow> forecast_rows(const std::vector<RunRecord>& records);
/// Strategy order follows first appearance in `rows`.
Aggregates aggregate(const std::vector<ForecastRow>& rows);

struct ExperimentResult {
  std::vector<RunRecord> records;
  Aggregates aggregates;
  std::size_t failures = 0;
};

/// Runs every (series, repetition) job on `cfg.workers` threads and writes all artifacts to
/// cfg.out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);
void write_aggregates(const std::filesystem::path& dir, const Aggregates& agg);

std::vector<ForecastRow> read_forecasts(const std::filesystem::path& file);

/// Recomputes aggregates from forecasts.csv and returns the largest absolute difference to
/// the stored metrics.csv means.
struct CompareResult {
  Aggregates aggregates;
  double max_metric_difference = 0.0;
};
CompareResult compare_run(const std::filesystem::path& run_dir);

struct TraceExport {
  std::size_t traces = 0;
  std::size_t rows = 0;
};
/// Writes trace_export/<name>.csv (generation, best_fitness, mean_fitness, seconds) and
/// timing_summary.csv (strategy, dataset, mean_cpu_seconds).
TraceExport export_traces(const std::filesystem::path& run_dir);

}  // namespace msf
