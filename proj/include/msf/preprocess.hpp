#pragma once

#include "msf/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace msf {

struct ScaleParams {
  double min = 0.0;
  double max = 1.0;
};

ScaleParams minmax_fit(std::span<const double> values);
std::vector<double> minmax_apply(const ScaleParams& params, std::span<const double> values);
std::vector<double> minmax_invert(const ScaleParams& params, std::span<const double> values);

inline double minmax_apply(const ScaleParams& p, double x) { return (x - p.min) / (p.max - p.min); }
inline double minmax_invert(const ScaleParams& p, double y) { return y * (p.max - p.min) + p.min; }

struct MannKendallResult {
  long long s = 0;
  double variance = 0.0;
  double z = 0.0;
  bool trending = false;
};

/// Two-sided Mann-Kendall trend test at the 5% level (|z| > 1.96), with tie-corrected
/// variance and continuity correction.
MannKendallResult mann_kendall(std::span<const double> values);

/// Polynomial trend in the time index t = 1..n; coefficients in ascending powers.
struct TrendModel {
  int degree = 0;
  Eigen::VectorXd coefficients;

  double operator()(double t) const;
};

struct Detrended {
  std::vector<double> residuals;
  TrendModel trend;
};

Detrended detrend_poly(std::span<const double> values, int degree);
std::vector<double> retrend(const TrendModel& trend, std::span<const double> residuals, double first_t = 1.0);

struct PreprocessOptions {
  bool detrend = true;  // only applied when Mann-Kendall reports a trend
  int trend_degree = 1;
};

/// Estimation sample mapped into model space: scaled to [0, 1], then detrended when a
/// monotone trend is detected. Deseasonalization is a pass-through hook and is reported
/// as inactive.
struct PreparedSeries {
  ScaleParams scale;
  std::optional<TrendModel> trend;
  MannKendallResult trend_test;
  bool deseasonalized = false;
  std::vector<double> values;  // model space, time index t = 1..n

  /// Model-space value at 1-based time t back to original units.
  double to_original(double model_value, double t) const;
  double to_model(double original, double t) const;
};

PreparedSeries prepare_series(std::span<const double> estimation, const PreprocessOptions& options = {});

}  // namespace msf
