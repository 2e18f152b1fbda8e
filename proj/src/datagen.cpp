#include "msf/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace msf {

TimeSeries gen_logistic(const LogisticConfig& cfg) {
  if (!(cfg.phi1 > 0.0 && cfg.phi1 < 1.0)) throw std::invalid_argument("logistic phi1 must lie in (0, 1)");
  if (cfg.length == 0) throw std::invalid_argument("logistic length must be positive");
  std::vector<double> values(cfg.length);
  values[0] = cfg.phi1;
  for (std::size_t t = 1; t < cfg.length; ++t) values[t] = 4.0 * values[t - 1] * (1.0 - values[t - 1]);
  std::ostringstream name;
  name << "logistic_phi" << cfg.phi1 << "_n" << cfg.length;
  return TimeSeries{name.str(), std::move(values)};
}

namespace {

class DelayedTrajectory {
 public:
  DelayedTrajectory(double history, double dt, MackeyGlassInterpolation interp)
      : history_(history), dt_(dt), interp_(interp) {}

  void push(double x, double slope) {
    x_.push_back(x);
    f_.push_back(slope);
  }

  // Value at time (step + frac) * dt, frac in [0, 1).
  double at(std::ptrdiff_t step, double frac) const {
    if (step < 0 && (frac == 0.0 || step + 1 <= 0)) return history_;
    const auto i = static_cast<std::size_t>(step);
    if (frac == 0.0) return x_[i];
    const double x0 = x_[i], x1 = x_[i + 1];
    if (interp_ == MackeyGlassInterpolation::linear) return x0 + frac * (x1 - x0);
    const double f0 = f_[i], f1 = f_[i + 1];
    const double s = frac, s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * x0 + h10 * dt_ * f0 + h01 * x1 + h11 * dt_ * f1;
  }

  std::size_t size() const { return x_.size(); }
  double back() const { return x_.back(); }

 private:
  double history_;
  double dt_;
  MackeyGlassInterpolation interp_;
  std::vector<double> x_;
  std::vector<double> f_;
};

}  // namespace

TimeSeries gen_mackey_glass(const MackeyGlassConfig& cfg) {
  if (cfg.tau < 1) throw std::invalid_argument("Mackey-Glass tau must be at least 1");
  if (cfg.length == 0) throw std::invalid_argument("Mackey-Glass length must be positive");
  if (!(cfg.phi1 > 0.0) || !std::isfinite(cfg.phi1))
    throw std::invalid_argument("Mackey-Glass phi1 must be positive");
  if (!(cfg.dt > 0.0) || cfg.dt > 1.0) throw std::invalid_argument("Mackey-Glass dt must lie in (0, 1]");
  const double per_unit = 1.0 / cfg.dt;
  const auto steps_per_unit = static_cast<std::ptrdiff_t>(std::llround(per_unit));
  if (std::abs(per_unit - static_cast<double>(steps_per_unit)) > 1e-9)
    throw std::invalid_argument("Mackey-Glass dt must divide the unit sampling interval");

  const double dt = 1.0 / static_cast<double>(steps_per_unit);
  const std::ptrdiff_t delay = cfg.tau * steps_per_unit;
  const std::size_t samples = cfg.burn_in + cfg.length;
  const auto total_steps = static_cast<std::ptrdiff_t>(samples - 1) * steps_per_unit;

  DelayedTrajectory traj(cfg.phi1, dt, cfg.interpolation);
  double x = cfg.phi1;
  for (std::ptrdiff_t n = 0;; ++n) {
    const double k1 = mackey_glass_rhs(x, traj.at(n - delay, 0.0));
    traj.push(x, k1);
    if (n == total_steps) break;
    const double mid_delayed = traj.at(n - delay, 0.5);
    const double end_delayed = traj.at(n - delay + 1, 0.0);
    const double k2 = mackey_glass_rhs(x + 0.5 * dt * k1, mid_delayed);
    const double k3 = mackey_glass_rhs(x + 0.5 * dt * k2, mid_delayed);
    const double k4 = mackey_glass_rhs(x + dt * k3, end_delayed);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  std::vector<double> values;
  values.reserve(cfg.length);
  for (std::size_t j = cfg.burn_in; j < samples; ++j)
    values.push_back(traj.at(static_cast<std::ptrdiff_t>(j) * steps_per_unit, 0.0));
  std::ostringstream name;
  name << "mackey_glass_phi" << cfg.phi1 << "_tau" << cfg.tau << "_n" << cfg.length;
  return TimeSeries{name.str(), std::move(values)};
}

const std::vector<LogisticPreset>& logistic_presets() {
  static const std::vector<LogisticPreset> rows = {
      {0.100, 485}, {0.125, 496}, {0.150, 523}, {0.175, 548}, {0.200, 674}, {0.225, 692}, {0.260, 726},
      {0.275, 758}, {0.300, 779}, {0.325, 791}, {0.350, 821}, {0.375, 843}, {0.400, 869}, {0.425, 889},
      {0.450, 912}, {0.475, 926}, {0.510, 946}, {0.525, 964}, {0.550, 987}, {0.575, 1002}};
  return rows;
}

const std::vector<MackeyGlassPreset>& mackey_glass_presets() {
  static const std::vector<MackeyGlassPreset> rows = {
      {1.0, 15, 485}, {1.2, 15, 496}, {1.4, 15, 523}, {1.6, 15, 548}, {1.8, 15, 674},
      {2.0, 15, 692}, {1.0, 16, 726}, {1.2, 16, 758}, {1.4, 16, 779}, {1.6, 16, 791},
      {1.8, 16, 821}, {2.0, 16, 843}, {1.0, 17, 869}, {1.2, 17, 889}, {1.4, 17, 912},
      {1.6, 17, 926}, {1.8, 17, 946}, {2.0, 17, 964}, {1.0, 18, 987}, {1.2, 18, 1002}};
  return rows;
}

std::vector<TimeSeries> preset_series(const std::string& preset, const std::vector<int>& rows) {
  const bool logistic = preset == "logistic-20";
  if (!logistic && preset != "mackey-glass-20") throw std::invalid_argument("unknown preset '" + preset + "'");
  std::vector<int> selected = rows;
  if (selected.empty())
    for (int r = 1; r <= 20; ++r) selected.push_back(r);
  std::vector<TimeSeries> out;
  for (int r : selected) {
    if (r < 1 || r > 20) throw std::invalid_argument("preset row " + std::to_string(r) + " out of range 1..20");
    const auto idx = static_cast<std::size_t>(r - 1);
    TimeSeries s;
    if (logistic) {
      const auto& p = logistic_presets()[idx];
      s = gen_logistic({p.phi1, p.length});
      s.name = "logistic-" + std::to_string(r);
    } else {
      const auto& p = mackey_glass_presets()[idx];
      MackeyGlassConfig cfg;
      cfg.phi1 = p.phi1;
      cfg.tau = p.tau;
      cfg.length = p.length;
      s = gen_mackey_glass(cfg);
      s.name = "mackey-glass-" + std::to_string(r);
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(cell, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == cell.size() && std::isfinite(out);
}

struct Line {
  std::size_t number;  // 1-based line number in the file
  std::vector<std::string> cells;
};

std::vector<TimeSeries> parse_long(const std::vector<Line>& lines) {
  std::vector<TimeSeries> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.cells.size() != 3) throw ParseError("long-format row needs 3 cells", line.number, line.cells.size());
    double t = 0.0, value = 0.0;
    if (!parse_number(line.cells[1], t)) throw ParseError("non-numeric time '" + line.cells[1] + "'", line.number, 2);
    if (!parse_number(line.cells[2], value))
      throw ParseError("non-numeric value '" + line.cells[2] + "'", line.number, 3);
    auto [it, inserted] = index.try_emplace(line.cells[0], out.size());
    if (inserted)
      out.push_back(TimeSeries{line.cells[0], {value}});
    else
      out[it->second].values.push_back(value);
  }
  if (out.empty()) throw ParseError("no observations", lines.front().number, 1);
  return out;
}

std::vector<TimeSeries> parse_wide(const std::vector<Line>& lines) {
  const auto& first = lines.front();
  bool header = false;
  for (const auto& cell : first.cells) {
    double v;
    if (!parse_number(cell, v)) header = true;
  }
  const std::size_t width = first.cells.size();
  std::vector<TimeSeries> out(width);
  for (std::size_t c = 0; c < width; ++c)
    out[c].name = header ? first.cells[c] : "series" + std::to_string(c + 1);
  std::vector<bool> ended(width, false);
  for (std::size_t i = header ? 1 : 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.cells.size() != width)
      throw ParseError("row has " + std::to_string(line.cells.size()) + " cells, expected " + std::to_string(width),
                       line.number, std::min(line.cells.size(), width) + 1);
    for (std::size_t c = 0; c < width; ++c) {
      const auto& cell = line.cells[c];
      if (cell.empty()) {
        ended[c] = true;
        continue;
      }
      double v;
      if (!parse_number(cell, v)) throw ParseError("non-numeric value '" + cell + "'", line.number, c + 1);
      if (ended[c]) throw ParseError("value after blank padding", line.number, c + 1);
      out[c].values.push_back(v);
    }
  }
  for (std::size_t c = 0; c < width; ++c)
    if (out[c].values.empty()) throw ParseError("column '" + out[c].name + "' has no values", first.number, c + 1);
  return out;
}

}  // namespace

std::vector<TimeSeries> parse_csv_series(const std::string& text, const CsvFormat& format) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;
    lines.push_back({number, split_cells(raw)});
  }
  if (lines.empty()) throw ParseError("empty CSV input", 0, 0);

  CsvLayout layout = format.layout;
  if (layout == CsvLayout::automatic) {
    const auto& h = lines.front().cells;
    layout = (h.size() == 3 && h[0] == "series_id" && h[1] == "t" && h[2] == "value") ? CsvLayout::long_format
                                                                                         : CsvLayout::wide;
  }
  return layout == CsvLayout::long_format ? parse_long(lines) : parse_wide(lines);
}

std::vector<TimeSeries> load_csv_series(const std::filesystem::path& path, const CsvFormat& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_series(buf.str(), format);
}

void write_csv_series(const std::filesystem::path& path, const std::vector<TimeSeries>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::size_t longest = 0;
  for (std::size_t c = 0; c < series.size(); ++c) {
    out << (c ? "," : "") << series[c].name;
    longest = std::max(longest, series[c].size());
  }
  out << "\n";
  char buf[40];
  for (std::size_t r = 0; r < longest; ++r) {
    for (std::size_t c = 0; c < series.size(); ++c) {
      if (c) out << ",";
      if (r < series[c].size()) {
        std::snprintf(buf, sizeof buf, "%.17g", series[c].values[r]);
        out << buf;
      }
    }
    out << "\n";
  }
}

}  // namespace msf
