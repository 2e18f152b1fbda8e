#pragma once

#include "msf/core.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace msf {

struct LogisticConfig {
  double phi1 = 0.1;
  std::size_t length = 485;
};

enum class MackeyGlassInterpolation { linear, hermite };

struct MackeyGlassConfig {
  double phi1 = 1.2;
  int tau = 17;
  std::size_t length = 500;
  double dt = 0.1;
  std::size_t burn_in = 100;
  MackeyGlassInterpolation interpolation = MackeyGlassInterpolation::hermite;
};

/// Logistic map x[t] = 4 x[t-1] (1 - x[t-1]) started at phi1.
TimeSeries gen_logistic(const LogisticConfig& cfg);

/// Mackey-Glass delay equation dx/dt = 0.2 x(t-tau) / (1 + x(t-tau)^10) - 0.1 x(t),
/// constant history x = phi1 for t <= 0. Integrated with classical RK4; delayed values
/// between grid points are interpolated from the stored trajectory (cubic Hermite by
/// default, which keeps the scheme fourth order; linear is kept for comparison).
/// Samples are taken at unit spacing; the first `burn_in` samples are dropped.
TimeSeries gen_mackey_glass(const MackeyGlassConfig& cfg);

/// Right-hand side of the Mackey-Glass equation.
inline double mackey_glass_rhs(double current, double delayed) {
  const double d10 = std::pow(delayed, 10);
  return 0.2 * delayed / (1.0 + d10) - 0.1 * current;
}

// Benchmark presets (20 configurations per generator).
struct LogisticPreset {
  double phi1;
  std::size_t length;
};
struct MackeyGlassPreset {
  double phi1;
  int tau;
  std::size_t length;
};
const std::vector<LogisticPreset>& logistic_presets();
const std::vector<MackeyGlassPreset>& mackey_glass_presets();

/// Generates preset rows (1-based row numbers); empty `rows` means all twenty.
std::vector<TimeSeries> preset_series(const std::string& preset, const std::vector<int>& rows = {});

enum class CsvLayout { automatic, long_format, wide };

struct CsvFormat {
  CsvLayout layout = CsvLayout::automatic;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
        row_(row),
        column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Long layout: header `series_id,t,value`, one observation per line, series in order of
/// first appearance. Wide layout: one column per series, header optional (detected by a
/// non-numeric first row); shorter series are padded with trailing blank cells.
std::vector<TimeSeries> load_csv_series(const std::filesystem::path& path, const CsvFormat& format = {});
std::vector<TimeSeries> parse_csv_series(const std::string& text, const CsvFormat& format = {});

/// Writes series in wide layout with a header row of names.
void write_csv_series(const std::filesystem::path& path, const std::vector<TimeSeries>& series);

}  // namespace msf
