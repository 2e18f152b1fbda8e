#include "msf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace msf {

std::string to_string(Measure m) {
  switch (m) {
    case Measure::mape: return "MAPE";
    case Measure::smape: return "SMAPE";
    case Measure::mase: return "MASE";
  }
  return "unknown";
}

Measure parse_measure(const std::string& name) {
  for (Measure m : kMeasures)
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown measure " + name);
}

namespace {

void check_pair(std::span<const double> actual, std::span<const double> forecast) {
  if (actual.size() != forecast.size()) throw std::invalid_argument("actual and forecast counts differ");
  if (actual.empty()) throw std::invalid_argument("no series to score");
}

}  // namespace

double mape(std::span<const double> actual, std::span<const double> forecast) {
  check_pair(actual, forecast);
  double sum = 0.0;
  for (std::size_t m = 0; m < actual.size(); ++m) {
    if (actual[m] == 0.0) throw std::domain_error("zero actual value in series " + std::to_string(m));
    sum += std::abs(actual[m] - forecast[m]) / std::abs(actual[m]);
  }
  return sum / static_cast<double>(actual.size()) * 100.0;
}

double smape(std::span<const double> actual, std::span<const double> forecast, bool standard) {
  check_pair(actual, forecast);
  double sum = 0.0;
  for (std::size_t m = 0; m < actual.size(); ++m) {
    const double err = std::abs(actual[m] - forecast[m]);
    if (standard) {
      const double denom = std::abs(actual[m]) + std::abs(forecast[m]);
      sum += denom > 0.0 ? 2.0 * err / denom : 0.0;
    } else {
      const double denom = actual[m] + forecast[m];
      if (!(denom > 0.0)) throw std::domain_error("nonpositive SMAPE denominator in series " + std::to_string(m));
      sum += err / denom;
    }
  }
  return sum / static_cast<double>(actual.size()) * 100.0;
}

double mase(std::span<const double> actual, std::span<const double> forecast, std::span<const double> scale) {
  check_pair(actual, forecast);
  if (scale.size() != actual.size()) throw std::invalid_argument("one MASE scale per series required");
  double sum = 0.0;
  for (std::size_t m = 0; m < actual.size(); ++m) {
    if (!(scale[m] > 0.0)) throw std::domain_error("zero naive MAE in series " + std::to_string(m));
    sum += std::abs(actual[m] - forecast[m]) / scale[m];
  }
  return sum / static_cast<double>(actual.size());
}

double naive_mae(std::span<const double> insample) {
  if (insample.size() < 2) throw std::invalid_argument("naive MAE needs at least two points");
  double sum = 0.0;
  for (std::size_t i = 1; i < insample.size(); ++i) sum += std::abs(insample[i] - insample[i - 1]);
  const double out = sum / static_cast<double>(insample.size() - 1);
  if (!(out > 0.0)) throw std::domain_error("constant in-sample series has zero naive MAE");
  return out;
}

namespace {

std::vector<double> column(const SeriesMatrix& m, int h) {
  if (h < 1) throw std::invalid_argument("horizon index must be positive");
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& row : m) {
    if (static_cast<std::size_t>(h) > row.size()) throw std::invalid_argument("horizon beyond series length");
    out.push_back(row[static_cast<std::size_t>(h - 1)]);
  }
  return out;
}

}  // namespace

double mape_h(const SeriesMatrix& actuals, const SeriesMatrix& forecasts, int h) {
  return mape(column(actuals, h), column(forecasts, h));
}

double smape_h(const SeriesMatrix& actuals, const SeriesMatrix& forecasts, int h, bool standard) {
  return smape(column(actuals, h), column(forecasts, h), standard);
}

double mase_h(const SeriesMatrix& actuals, const SeriesMatrix& forecasts, const SeriesMatrix& insample, int h) {
  std::vector<double> scales;
  for (const auto& s : insample) scales.push_back(naive_mae(s));
  return mase(column(actuals, h), column(forecasts, h), scales);
}

HorizonScores score_horizons(Measure measure, const SeriesMatrix& actuals, const SeriesMatrix& forecasts,
                             std::span<const double> scales) {
  if (actuals.empty()) throw std::invalid_argument("no series to score");
  HorizonScores out;
  out.measure = measure;
  const int horizon = static_cast<int>(actuals.front().size());
  for (int h = 1; h <= horizon; ++h) {
    const auto a = column(actuals, h);
    const auto f = column(forecasts, h);
    switch (measure) {
      case Measure::mape: out.values.push_back(mape(a, f)); break;
      case Measure::smape: out.values.push_back(smape(a, f)); break;
      case Measure::mase: out.values.push_back(mase(a, f, scales)); break;
    }
  }
  return out;
}

double average_over_horizons(std::span<const double> values, int h_lo, int h_hi) {
  if (h_lo < 1 || h_hi < h_lo || static_cast<std::size_t>(h_hi) > values.size())
    throw std::invalid_argument("invalid horizon range " + std::to_string(h_lo) + ".." + std::to_string(h_hi));
  const auto first = values.begin() + (h_lo - 1);
  return std::accumulate(first, values.begin() + h_hi, 0.0) / (h_hi - h_lo + 1);
}

std::vector<double> rank_with_ties(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

RankTable average_rank(const std::vector<std::vector<double>>& scores) {
  RankTable out;
  if (scores.empty()) return out;
  const std::size_t horizon = scores.front().size();
  for (const auto& s : scores)
    if (s.size() != horizon) throw std::invalid_argument("strategies differ in horizon count");
  out.average.assign(scores.size(), 0.0);
  for (std::size_t h = 0; h < horizon; ++h) {
    std::vector<double> at(scores.size());
    for (std::size_t k = 0; k < scores.size(); ++k) at[k] = scores[k][h];
    auto ranks = rank_with_ties(at);
    for (std::size_t k = 0; k < ranks.size(); ++k) out.average[k] += ranks[k];
    out.per_horizon.push_back(std::move(ranks));
  }
  if (horizon > 0)
    for (auto& a : out.average) a /= static_cast<double>(horizon);
  return out;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta parameters must be positive");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double f_survival(double f, double df1, double df2) {
  if (std::isinf(f)) return 0.0;
  if (!(f > 0.0)) return 1.0;
  return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups, double alpha) {
  if (groups.size() < 2) throw std::invalid_argument("ANOVA needs at least two groups");
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw std::invalid_argument("each ANOVA group needs at least two samples");
    total = std::accumulate(g.begin(), g.end(), total);
    n += g.size();
  }
  const double grand = total / static_cast<double>(n);
  AnovaResult out;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    out.ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) out.ss_within += (v - mean) * (v - mean);
  }
  out.df_between = static_cast<int>(groups.size()) - 1;
  out.df_within = static_cast<int>(n - groups.size());
  const double ms_between = out.ss_between / out.df_between;
  const double ms_within = out.ss_within / out.df_within;
  if (ms_within == 0.0) {
    out.f = ms_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    out.p = ms_between > 0.0 ? 0.0 : 1.0;
  } else {
    out.f = ms_between / ms_within;
    out.p = f_survival(out.f, out.df_between, out.df_within);
  }
  out.significant = out.p < alpha;
  return out;
}

}  // namespace msf
