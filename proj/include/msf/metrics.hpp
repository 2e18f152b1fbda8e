#pragma once

#include <span>
#include <string>
#include <vector>

namespace msf {

enum class Measure { mape, smape, mase };
std::string to_string(Measure m);
Measure parse_measure(const std::string& name);
inline constexpr Measure kMeasures[] = {Measure::mape, Measure::smape, Measure::mase};

/// Accuracy at one horizon across M series; element m of each span belongs to series m.
double mape(std::span<const double> actual, std::span<const double> forecast);
/// |a - f| / (a + f) * 100 averaged; with `standard`, 2|a - f| / (|a| + |f|) * 100.
double smape(std::span<const double> actual, std::span<const double> forecast, bool standard = false);
/// Absolute errors divided by per-series naive one-step MAE.
double mase(std::span<const double> actual, std::span<const double> forecast, std::span<const double> scale);

/// In-sample MAE of the one-step naive forecast.
double naive_mae(std::span<const double> insample);

using SeriesMatrix = std::vector<std::vector<double>>;  // [series][h-1]

double mape_h(const SeriesMatrix& actuals, const SeriesMatrix& forecasts, int h);
double smape_h(const SeriesMatrix& actuals, const SeriesMatrix& forecasts, int h, bool standard = false);
double mase_h(const SeriesMatrix& actuals, const SeriesMatrix& forecasts, const SeriesMatrix& insample, int h);

struct HorizonScores {
  Measure measure = Measure::mape;
  std::vector<double> values;  // h = 1..H
  std::string dataset;
  std::string strategy;
  int repetition = 0;
};

/// Scores of one measure at every horizon. `scales` is required for MASE.
HorizonScores score_horizons(Measure measure, const SeriesMatrix& actuals, const SeriesMatrix& forecasts,
                             std::span<const double> scales = {});

/// Mean of values h_lo..h_hi (1-based, inclusive).
double average_over_horizons(std::span<const double> values, int h_lo, int h_hi);

struct RankTable {
  std::vector<std::vector<double>> per_horizon;  // [h-1][strategy]
  std::vector<double> average;                   // per strategy
};

/// Ascending ranks per horizon with mean ranks for ties. Input is [strategy][h-1].
RankTable average_rank(const std::vector<std::vector<double>>& per_strategy_scores);

/// Mid-ranks of a single vector (1 = smallest).
std::vector<double> rank_with_ties(std::span<const double> values);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  int df_between = 0;
  int df_within = 0;
  bool significant = false;
};

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups, double alpha = 0.05);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
/// Upper tail P(F > f) of the F distribution.
double f_survival(double f, double df1, double df2);

}  // namespace msf
