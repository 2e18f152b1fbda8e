#include "msf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace msf {

ScaleParams minmax_fit(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("cannot fit a scale on an empty series");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) throw std::invalid_argument("cannot fit a scale on a constant series");
  return {*lo, *hi};
}

std::vector<double> minmax_apply(const ScaleParams& params, std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [&](double x) { return minmax_apply(params, x); });
  return out;
}

std::vector<double> minmax_invert(const ScaleParams& params, std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [&](double y) { return minmax_invert(params, y); });
  return out;
}

MannKendallResult mann_kendall(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) throw std::invalid_argument("Mann-Kendall test needs at least 4 observations");
  MannKendallResult r;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) r.s += (values[j] > values[i]) - (values[j] < values[i]);

  std::map<double, long long> ties;
  for (double v : values) ++ties[v];
  const auto nn = static_cast<double>(n);
  double var = nn * (nn - 1) * (2 * nn + 5);
  for (const auto& [value, count] : ties) {
    const auto t = static_cast<double>(count);
    var -= t * (t - 1) * (2 * t + 5);
  }
  r.variance = var / 18.0;
  if (r.variance > 0.0) {
    if (r.s > 0) r.z = (static_cast<double>(r.s) - 1.0) / std::sqrt(r.variance);
    if (r.s < 0) r.z = (static_cast<double>(r.s) + 1.0) / std::sqrt(r.variance);
  }
  r.trending = std::abs(r.z) > 1.96;
  return r;
}

double TrendModel::operator()(double t) const {
  double acc = 0.0;
  for (Index k = coefficients.size() - 1; k >= 0; --k) acc = acc * t + coefficients(k);
  return acc;
}

Detrended detrend_poly(std::span<const double> values, int degree) {
  if (degree < 0) throw std::invalid_argument("trend degree must be nonnegative");
  const auto n = static_cast<Index>(values.size());
  if (n <= degree + 1)
    throw std::invalid_argument("polynomial trend of degree " + std::to_string(degree) + " needs more than " +
                                std::to_string(degree + 1) + " observations");
  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1);
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= t) design(i, k) = p;
    y(i) = values[static_cast<std::size_t>(i)];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < degree + 1) throw std::invalid_argument("rank-deficient trend design");
  Detrended out;
  out.trend.degree = degree;
  out.trend.coefficients = qr.solve(y);
  out.residuals.resize(values.size());
  for (Index i = 0; i < n; ++i)
    out.residuals[static_cast<std::size_t>(i)] = y(i) - out.trend(static_cast<double>(i + 1));
  return out;
}

std::vector<double> retrend(const TrendModel& trend, std::span<const double> residuals, double first_t) {
  std::vector<double> out(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) out[i] = residuals[i] + trend(first_t + static_cast<double>(i));
  return out;
}

double PreparedSeries::to_original(double model_value, double t) const {
  const double scaled = trend ? model_value + (*trend)(t) : model_value;
  return minmax_invert(scale, scaled);
}

double PreparedSeries::to_model(double original, double t) const {
  const double scaled = minmax_apply(scale, original);
  return trend ? scaled - (*trend)(t) : scaled;
}

PreparedSeries prepare_series(std::span<const double> estimation, const PreprocessOptions& options) {
  PreparedSeries out;
  out.scale = minmax_fit(estimation);
  out.values = minmax_apply(out.scale, estimation);
  out.trend_test = mann_kendall(out.values);
  if (options.detrend && out.trend_test.trending) {
    auto detrended = detrend_poly(out.values, options.trend_degree);
    out.values = std::move(detrended.residuals);
    out.trend = std::move(detrended.trend);
  }
  return out;
}

}  // namespace msf
