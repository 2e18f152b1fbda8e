#include "msf/experiment.hpp"

#include "msf/datagen.hpp"
#include "msf/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace msf {

namespace fs = std::filesystem;

std::string to_string(Method m) {
  switch (m) {
    case Method::iterated: return "iterated";
    case Method::direct: return "direct";
    case Method::mimo: return "mimo";
    case Method::mismo: return "mismo";
    case Method::pso_mismo: return "pso-mismo";
    case Method::ga_mismo: return "ga-mismo";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::iterated, Method::direct, Method::mimo, Method::mismo, Method::pso_mismo, Method::ga_mismo})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown strategy '" + name + "'");
}

ExperimentConfig profile_config(const std::string& profile) {
  ExperimentConfig cfg;
  cfg.profile = profile;
  if (profile == "paper") return cfg;
  if (profile != "desk") throw ConfigError("unknown profile '" + profile + "' (expected paper or desk)");
  cfg.pso.swarm_size = 10;
  cfg.pso.iterations = 30;
  cfg.ga.population = 10;
  cfg.ga.iterations = 30;
  cfg.fit.train.max_epochs = 100;
  cfg.preset_rows = {1, 2, 3};
  cfg.repetitions = 5;
  return cfg;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(std::string(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_number<int>(trim(part), key));
  return out;
}

std::string join(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto as_int = [&] { return parse_number<int>(value, key); };
  auto as_double = [&] { return parse_number<double>(value, key); };

  if (key == "dataset.preset") {
    c.dataset_preset = value;
    if (!value.empty()) c.dataset_csv.clear();
  } else if (key == "dataset.rows") {
    c.preset_rows = parse_int_list(value, key);
  } else if (key == "dataset.csv") {
    c.dataset_csv = value;
    if (!value.empty()) c.dataset_preset.clear();
  } else if (key == "dataset.name") {
    c.dataset_name = value;
  } else if (key == "strategies") {
    c.methods.clear();
    for (const auto& part : split(value, ',')) c.methods.push_back(parse_method(trim(part)));
  } else if (key == "horizon") {
    c.horizon = as_int();
  } else if (key == "holdout") {
    c.holdout_len = parse_number<std::size_t>(value, key);
  } else if (key == "repetitions") {
    c.repetitions = as_int();
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(value, key);
  } else if (key == "output") {
    c.out_dir = value;
  } else if (key == "workers") {
    c.workers = as_int();
  } else if (key == "mismo.sizes") {
    c.mismo_sizes = parse_int_list(value, key);
  } else if (key == "pso.swarm_size") {
    c.pso.swarm_size = as_int();
  } else if (key == "pso.iterations") {
    c.pso.iterations = as_int();
  } else if (key == "pso.c1") {
    c.pso.c1 = as_double();
  } else if (key == "pso.c2") {
    c.pso.c2 = as_double();
  } else if (key == "pso.w_max") {
    c.pso.w_max = as_double();
  } else if (key == "pso.w_min") {
    c.pso.w_min = as_double();
  } else if (key == "pso.v_max") {
    c.pso.v_max = as_double();
  } else if (key == "pso.stall_generations") {
    c.pso.stall_generations = as_int();
  } else if (key == "ga.population") {
    c.ga.population = as_int();
  } else if (key == "ga.iterations") {
    c.ga.iterations = as_int();
  } else if (key == "ga.crossover_prob") {
    c.ga.crossover_prob = as_double();
  } else if (key == "ga.mutation_prob") {
    c.ga.mutation_prob = as_double();
  } else if (key == "ga.selection") {
    if (value == "auto")
      c.ga_selection = GaSelectionRule::automatic;
    else if (value == "roulette")
      c.ga_selection = GaSelectionRule::roulette;
    else if (value == "top_percent")
      c.ga_selection = GaSelectionRule::top_percent;
    else
      throw ConfigError("invalid ga.selection '" + value + "' (auto, roulette or top_percent)");
  } else if (key == "ga.top_fraction") {
    c.ga.top_fraction = as_double();
  } else if (key == "ga.stall_generations") {
    c.ga.stall_generations = as_int();
  } else if (key == "fitness.cache") {
    c.fitness_cache = parse_bool(value, key);
  } else if (key == "train.max_epochs") {
    c.fit.train.max_epochs = as_int();
  } else if (key == "train.lambda_init") {
    c.fit.train.lambda_init = as_double();
  } else if (key == "train.gradient_tol") {
    c.fit.train.gradient_tol = as_double();
  } else if (key == "train.mse_goal") {
    c.fit.train.mse_goal = as_double();
  } else if (key == "train.init_half_width") {
    c.fit.train.init_half_width = as_double();
  } else if (key == "model.hidden") {
    c.fit.hidden_candidates = parse_int_list(value, key);
  } else if (key == "model.hidden_selection") {
    if (value == "aic")
      c.fit.hidden_selection = HiddenSelectionMethod::aic;
    else if (value == "cv")
      c.fit.hidden_selection = HiddenSelectionMethod::cross_validation;
    else
      throw ConfigError("invalid model.hidden_selection '" + value + "' (aic or cv)");
  } else if (key == "model.cv_folds") {
    c.fit.cv_folds = as_int();
  } else if (key == "model.max_lag") {
    c.fit.max_lag = as_int();
  } else if (key == "model.min_rows") {
    c.fit.min_rows = as_int();
  } else if (key == "preprocess.detrend") {
    c.fit.preprocess.detrend = parse_bool(value, key);
  } else if (key == "preprocess.trend_degree") {
    c.fit.preprocess.trend_degree = as_int();
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

void validate(const ExperimentConfig& c) {
  if (c.dataset_preset.empty() == c.dataset_csv.empty())
    throw ConfigError("exactly one of dataset.preset and dataset.csv must be set");
  if (c.methods.empty()) throw ConfigError("strategies must not be empty");
  if (c.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (c.horizon < 1) throw ConfigError("horizon must be positive");
  if (c.holdout_len < static_cast<std::size_t>(c.horizon)) throw ConfigError("holdout must cover the horizon");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (c.pso.swarm_size < 2 || c.pso.iterations < 1 || c.pso.w_max < c.pso.w_min || !(c.pso.v_max > 0.0))
    throw ConfigError("invalid pso settings");
  if (c.ga.population < 2 || c.ga.iterations < 1) throw ConfigError("invalid ga settings");
  for (double p : {c.ga.crossover_prob, c.ga.mutation_prob, c.ga.top_fraction})
    if (p < 0.0 || p > 1.0) throw ConfigError("ga probabilities must lie in [0, 1]");
  if (c.fit.hidden_candidates.empty()) throw ConfigError("model.hidden must not be empty");
  for (int h : c.fit.hidden_candidates)
    if (h < 1) throw ConfigError("hidden unit counts must be positive");
  if (c.fit.train.max_epochs < 1) throw ConfigError("train.max_epochs must be positive");
  if (c.fit.cv_folds < 2) throw ConfigError("model.cv_folds must be at least 2");
  if (c.fit.max_lag < 1) throw ConfigError("model.max_lag must be positive");
  const bool sweeps = std::find(c.methods.begin(), c.methods.end(), Method::mismo) != c.methods.end();
  if (sweeps && std::none_of(c.mismo_sizes.begin(), c.mismo_sizes.end(), [&](int s) { return s >= 1 && s <= c.horizon; }))
    throw ConfigError("mismo.sizes has no block size within 1..horizon");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    try {
      apply_key(base, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  validate(base);
  return base;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream out;
  auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
  kv("dataset.preset", c.dataset_preset);
  kv("dataset.rows", join(c.preset_rows));
  kv("dataset.csv", c.dataset_csv.string());
  kv("dataset.name", c.dataset_name);
  std::string methods;
  for (std::size_t i = 0; i < c.methods.size(); ++i) methods += (i ? "," : "") + to_string(c.methods[i]);
  kv("strategies", methods);
  kv("horizon", std::to_string(c.horizon));
  kv("holdout", std::to_string(c.holdout_len));
  kv("repetitions", std::to_string(c.repetitions));
  kv("seed", std::to_string(c.seed));
  kv("mismo.sizes", join(c.mismo_sizes));
  kv("pso.swarm_size", std::to_string(c.pso.swarm_size));
  kv("pso.iterations", std::to_string(c.pso.iterations));
  kv("pso.c1", num(c.pso.c1));
  kv("pso.c2", num(c.pso.c2));
  kv("pso.w_max", num(c.pso.w_max));
  kv("pso.w_min", num(c.pso.w_min));
  kv("pso.v_max", num(c.pso.v_max));
  kv("pso.stall_generations", std::to_string(c.pso.stall_generations));
  kv("ga.population", std::to_string(c.ga.population));
  kv("ga.iterations", std::to_string(c.ga.iterations));
  kv("ga.crossover_prob", num(c.ga.crossover_prob));
  kv("ga.mutation_prob", num(c.ga.mutation_prob));
  kv("ga.selection", c.ga_selection == GaSelectionRule::automatic ? "auto"
                     : c.ga_selection == GaSelectionRule::roulette ? "roulette"
                                                                   : "top_percent");
  kv("ga.top_fraction", num(c.ga.top_fraction));
  kv("ga.stall_generations", std::to_string(c.ga.stall_generations));
  kv("fitness.cache", c.fitness_cache ? "true" : "false");
  kv("train.max_epochs", std::to_string(c.fit.train.max_epochs));
  kv("train.lambda_init", num(c.fit.train.lambda_init));
  kv("train.gradient_tol", num(c.fit.train.gradient_tol));
  kv("train.mse_goal", num(c.fit.train.mse_goal));
  kv("train.init_half_width", num(c.fit.train.init_half_width));
  kv("model.hidden", join(c.fit.hidden_candidates));
  kv("model.hidden_selection", c.fit.hidden_selection == HiddenSelectionMethod::aic ? "aic" : "cv");
  kv("model.cv_folds", std::to_string(c.fit.cv_folds));
  kv("model.max_lag", std::to_string(c.fit.max_lag));
  kv("model.min_rows", std::to_string(c.fit.min_rows));
  kv("preprocess.detrend", c.fit.preprocess.detrend ? "true" : "false");
  kv("preprocess.trend_degree", std::to_string(c.fit.preprocess.trend_degree));
  return out.str();
}

std::vector<TimeSeries> load_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset_csv.empty()) return load_csv_series(cfg.dataset_csv);
  return preset_series(cfg.dataset_preset, cfg.preset_rows);
}

std::string dataset_label(const ExperimentConfig& cfg) {
  if (!cfg.dataset_name.empty()) return cfg.dataset_name;
  if (!cfg.dataset_csv.empty()) return cfg.dataset_csv.stem().string();
  const auto dash = cfg.dataset_preset.rfind('-');
  return dash == std::string::npos ? cfg.dataset_preset : cfg.dataset_preset.substr(0, dash);
}

namespace {

void hash_value(std::uint64_t& h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  h = mix64(h ^ bits);
}

void hash_value(std::uint64_t& h, std::int64_t v) { h = mix64(h ^ static_cast<std::uint64_t>(v)); }

}  // namespace

std::uint64_t artifact_hash(const StrategyModelSet& models) {
  std::uint64_t h = fnv1a(models.tag);
  hash_value(h, models.prep.scale.min);
  hash_value(h, models.prep.scale.max);
  if (models.prep.trend)
    for (Index i = 0; i < models.prep.trend->coefficients.size(); ++i) hash_value(h, models.prep.trend->coefficients(i));
  for (int s : models.partition.segments) hash_value(h, std::int64_t{s});
  for (const auto& seg : models.segments) {
    hash_value(h, std::int64_t{seg.first_offset});
    hash_value(h, std::int64_t{seg.length});
    for (int lag : seg.lags.lags) hash_value(h, std::int64_t{lag});
    const Eigen::VectorXd flat = seg.params.flatten();
    for (Index i = 0; i < flat.size(); ++i) hash_value(h, flat(i));
  }
  return h;
}

namespace {

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

Selection ga_selection_for(const ExperimentConfig& cfg, const std::string& dataset) {
  switch (cfg.ga_selection) {
    case GaSelectionRule::roulette: return Selection::roulette;
    case GaSelectionRule::top_percent: return Selection::top_percent;
    case GaSelectionRule::automatic: break;
  }
  return dataset.rfind("logistic", 0) == 0 ? Selection::roulette : Selection::top_percent;
}

}  // namespace

std::vector<RunRecord> run_series(const TimeSeries& series, const std::string& dataset, int repetition,
                                  const ExperimentConfig& cfg) {
  const int horizon = cfg.horizon;
  RunRecord base;
  base.dataset = dataset;
  base.series = series.name;
  base.repetition = repetition;
  base.seed = derive_seed(cfg.seed, series.name, repetition, "submodel");

  std::vector<RunRecord> out;
  TimeSeries estimation, holdout;
  std::optional<FitnessContext> fitness_ctx;
  const FitContext ctx{cfg.fit, base.seed, std::make_shared<SegmentCache>()};
  std::string setup_error;
  try {
    std::tie(estimation, holdout) = split_holdout(series, SplitSpec{cfg.holdout_len});
    base.actual.assign(holdout.values.begin(), holdout.values.begin() + horizon);
    base.mase_scale = naive_mae(estimation.view());
  } catch (const std::exception& e) {
    setup_error = e.what();
  }

  auto fitness_context = [&]() -> const FitnessContext& {
    if (!fitness_ctx)
      fitness_ctx = make_fitness_context(prepare_series(estimation.view(), cfg.fit.preprocess), horizon, ctx);
    return *fitness_ctx;
  };

  for (Method method : cfg.methods) {
    RunRecord rec = base;
    rec.method = method;
    const auto wall_start = std::chrono::steady_clock::now();
    const double cpu_start = thread_cpu_seconds();
    try {
      if (!setup_error.empty()) throw std::runtime_error(setup_error);
      StrategySpec spec;
      auto search = [&](auto run_optimizer) {
        const auto& fctx = fitness_context();
        FitnessFunction fitness = [&fctx](const BinaryMask& m) { return evaluate_fitness(m, fctx); };
        std::optional<CachedFitness> cached;
        if (cfg.fitness_cache) {
          cached.emplace(fitness);
          fitness = cached->function();
        }
        CountingFitness counter(fitness);
        OptimizerResult res = run_optimizer(counter.function());
        if (!std::isfinite(res.best_fitness)) throw std::runtime_error("no partition reached a finite fitness");
        rec.evaluations = counter.count();
        rec.mask = res.best;
        rec.fitness = res.best_fitness;
        rec.trace = std::move(res.trace);
        spec.kind = StrategyKind::partitioned;
        spec.partition = decode_partition(res.best, horizon);
      };

      switch (method) {
        case Method::iterated: spec.kind = StrategyKind::iterated; break;
        case Method::direct: spec.kind = StrategyKind::direct; break;
        case Method::mimo: spec.kind = StrategyKind::mimo; break;
        case Method::mismo: {
          const auto& fctx = fitness_context();
          double best = std::numeric_limits<double>::infinity();
          for (int s : cfg.mismo_sizes) {
            if (s < 1 || s > horizon) continue;
            const double f = evaluate_fitness(encode_partition(mismo_partition(s, horizon)), fctx);
            ++rec.evaluations;
            if (f < best) {
              best = f;
              rec.mismo_s = s;
            }
          }
          if (!std::isfinite(best)) throw std::runtime_error("every MISMO block size failed validation");
          rec.fitness = best;
          spec.kind = StrategyKind::mismo;
          spec.mismo_s = rec.mismo_s;
          break;
        }
        case Method::pso_mismo: {
          rec.optimizer_seed = derive_seed(cfg.seed, series.name, to_string(method), repetition, "optimizer");
          SwarmConfig sc = cfg.pso;
          sc.seed = rec.optimizer_seed;
          sc.workers = 1;
          search([&](const FitnessFunction& f) { return pso_run(f, static_cast<std::size_t>(horizon - 1), sc); });
          break;
        }
        case Method::ga_mismo: {
          rec.optimizer_seed = derive_seed(cfg.seed, series.name, to_string(method), repetition, "optimizer");
          GaConfig gc = cfg.ga;
          gc.seed = rec.optimizer_seed;
          gc.workers = 1;
          gc.selection = ga_selection_for(cfg, dataset);
          search([&](const FitnessFunction& f) { return ga_run(f, static_cast<std::size_t>(horizon - 1), gc); });
          break;
        }
      }

      const StrategyModelSet models = fit_strategy(spec, estimation, horizon, ctx);
      const ForecastResult fc = forecast(models, estimation.view());
      rec.forecast = fc.predictions;
      rec.partition = models.partition;
      for (const auto& seg : models.segments) {
        rec.lags.push_back(seg.lags.lags);
        rec.hidden.push_back(static_cast<int>(seg.shape.n_hidden));
      }
      rec.artifact_hash = artifact_hash(models);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
      rec.forecast.clear();
    }
    rec.cpu_seconds = thread_cpu_seconds() - cpu_start;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ForecastRow> forecast_rows(const std::vector<RunRecord>& records) {
  std::vector<ForecastRow> rows;
  for (const auto& r : records) {
    if (!r.ok) continue;
    for (std::size_t h = 0; h < r.forecast.size(); ++h)
      rows.push_back({r.dataset, r.series, to_string(r.method), r.repetition, static_cast<int>(h + 1), r.actual[h],
                      r.forecast[h], r.mase_scale});
  }
  return rows;
}

namespace {

template <typename T>
std::size_t index_of(std::vector<T>& order, const T& value) {
  const auto it = std::find(order.begin(), order.end(), value);
  if (it != order.end()) return static_cast<std::size_t>(it - order.begin());
  order.push_back(value);
  return order.size() - 1;
}

struct Cell {
  std::vector<std::string> series;
  SeriesMatrix actual, forecast;
  std::vector<double> scale;
};

double safe_score(Measure m, const Cell& c, int h) {
  try {
    std::vector<double> a, f;
    for (std::size_t i = 0; i < c.series.size(); ++i) {
      a.push_back(c.actual[i][static_cast<std::size_t>(h - 1)]);
      f.push_back(c.forecast[i][static_cast<std::size_t>(h - 1)]);
    }
    switch (m) {
      case Measure::mape: return mape(a, f);
      case Measure::smape: return smape(a, f);
      case Measure::mase: return mase(a, f, c.scale);
    }
  } catch (const std::exception&) {
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Aggregates aggregate(const std::vector<ForecastRow>& rows) {
  Aggregates agg;
  std::vector<std::string> datasets;
  std::map<std::string, std::vector<std::string>> strategies;  // per dataset, first-appearance order
  std::map<std::tuple<std::string, std::string, int>, Cell> cells;
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> sq_error;
  int horizon = 0;

  for (const auto& r : rows) {
    index_of(datasets, r.dataset);
    index_of(strategies[r.dataset], r.strategy);
    auto& cell = cells[{r.dataset, r.strategy, r.repetition}];
    const std::size_t s = index_of(cell.series, r.series);
    if (cell.actual.size() <= s) {
      cell.actual.emplace_back();
      cell.forecast.emplace_back();
      cell.scale.push_back(r.mase_scale);
    }
    const auto h = static_cast<std::size_t>(r.h);
    if (cell.actual[s].size() < h) {
      cell.actual[s].resize(h);
      cell.forecast[s].resize(h);
    }
    cell.actual[s][h - 1] = r.actual;
    cell.forecast[s][h - 1] = r.forecast;
    horizon = std::max(horizon, r.h);
    auto& se = sq_error[{r.dataset, r.strategy}];
    se.first += (r.actual - r.forecast) * (r.actual - r.forecast);
    ++se.second;
  }

  for (const auto& ds : datasets) {
    const auto& strats = strategies[ds];
    // [measure][strategy][h] -> per-repetition values
    std::map<Measure, std::vector<std::vector<std::vector<double>>>> values;
    for (Measure m : kMeasures)
      values[m].assign(strats.size(), std::vector<std::vector<double>>(static_cast<std::size_t>(horizon)));

    for (std::size_t k = 0; k < strats.size(); ++k) {
      for (const auto& [key, cell] : cells) {
        if (std::get<0>(key) != ds || std::get<1>(key) != strats[k]) continue;
        for (Measure m : kMeasures) {
          ScoreRow row{ds, strats[k], std::get<2>(key), {}};
          row.scores.measure = m;
          row.scores.dataset = ds;
          row.scores.strategy = strats[k];
          row.scores.repetition = std::get<2>(key);
          for (int h = 1; h <= horizon; ++h) {
            const double v = safe_score(m, cell, h);
            row.scores.values.push_back(v);
            values[m][k][static_cast<std::size_t>(h - 1)].push_back(v);
          }
          agg.scores.push_back(std::move(row));
        }
      }
    }

    for (Measure m : kMeasures) {
      std::vector<std::vector<double>> means(strats.size());
      for (std::size_t k = 0; k < strats.size(); ++k) {
        for (int h = 1; h <= horizon; ++h) {
          const auto& v = values[m][k][static_cast<std::size_t>(h - 1)];
          const double n = static_cast<double>(v.size());
          const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
          double var = 0.0;
          for (double x : v) var += (x - mean) * (x - mean);
          const double sd = v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
          agg.metrics.push_back({ds, strats[k], m, h, mean, sd});
          means[k].push_back(mean);
        }
      }
      const RankTable table = average_rank(means);
      for (int h = 1; h <= horizon; ++h)
        for (std::size_t k = 0; k < strats.size(); ++k)
          agg.ranks.push_back({ds, m, strats[k], h, table.per_horizon[static_cast<std::size_t>(h - 1)][k]});

      for (int h = 1; h <= horizon && strats.size() >= 2; ++h) {
        std::vector<std::vector<double>> groups;
        for (std::size_t k = 0; k < strats.size(); ++k) groups.push_back(values[m][k][static_cast<std::size_t>(h - 1)]);
        try {
          agg.anova.push_back({ds, m, h, anova_oneway(groups)});
        } catch (const std::exception&) {
          // too few repetitions for a within-group variance
        }
      }

      for (std::size_t k = 0; k < strats.size(); ++k) {
        auto it = std::find_if(agg.summary.begin(), agg.summary.end(),
                               [&](const SummaryRow& s) { return s.dataset == ds && s.strategy == strats[k]; });
        if (it == agg.summary.end()) {
          const auto& se = sq_error[{ds, strats[k]}];
          agg.summary.push_back({ds, strats[k], se.first / static_cast<double>(se.second), {}, 0.0});
          it = agg.summary.end() - 1;
        }
        it->average_rank[m] = table.average[k];
      }
    }
  }
  for (auto& s : agg.summary) {
    double total = 0.0;
    for (const auto& [m, r] : s.average_rank) total += r;
    s.mean_rank = total / static_cast<double>(s.average_rank.size());
  }
  return agg;
}

namespace {

void ensure_open(const std::ofstream& out, const fs::path& path) {
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string sanitize(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::string record_stem(const RunRecord& r) {
  return r.series + "_" + to_string(r.method) + "_r" + std::to_string(r.repetition);
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::ordered_json record_json(const RunRecord& r, const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["series"] = r.series;
  j["strategy"] = to_string(r.method);
  j["repetition"] = r.repetition;
  j["base_seed"] = cfg.seed;
  j["submodel_seed"] = r.seed;
  j["optimizer_seed"] = r.optimizer_seed;
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  j["horizon"] = cfg.horizon;
  j["holdout"] = cfg.holdout_len;
  j["validation_len"] = default_validation_len(cfg.horizon);
  j["partition"] = r.partition.segments;
  j["mask"] = r.mask ? r.mask->to_string() : std::string();
  j["mismo_s"] = r.mismo_s;
  j["validation_fitness"] = r.fitness;
  j["fitness_evaluations"] = r.evaluations;
  j["lags"] = r.lags;
  j["hidden_units"] = r.hidden;
  j["artifact_hash"] = hex(r.artifact_hash);
  j["mase_scale"] = r.mase_scale;
  j["actual"] = r.actual;
  j["forecast"] = r.forecast;
  return j;
}

}  // namespace

void write_aggregates(const fs::path& dir, const Aggregates& agg) {
  fs::create_directories(dir);
  {
    const auto path = dir / "scores.csv";
    std::ofstream out(path);
    ensure_open(out, path);
    out << "dataset,strategy,repetition,measure,h,value\n";
    for (const auto& row : agg.scores)
      for (std::size_t h = 0; h < row.scores.values.size(); ++h)
        out << row.dataset << ',' << row.strategy << ',' << row.repetition << ',' << to_string(row.scores.measure)
            << ',' << h + 1 << ',' << num(row.scores.values[h]) << '\n';
  }
  {
    const auto path = dir / "metrics.csv";
    std::ofstream out(path);
    ensure_open(out, path);
    out << "dataset,strategy,measure,h,mean,stddev\n";
    for (const auto& r : agg.metrics)
      out << r.dataset << ',' << r.strategy << ',' << to_string(r.measure) << ',' << r.h << ',' << num(r.mean) << ','
          << num(r.stddev) << '\n';
  }
  {
    const auto path = dir / "ranks.csv";
    std::ofstream out(path);
    ensure_open(out, path);
    out << "dataset,measure,strategy,h,rank\n";
    for (const auto& r : agg.ranks)
      out << r.dataset << ',' << to_string(r.measure) << ',' << r.strategy << ',' << r.h << ',' << num(r.rank) << '\n';
  }
  {
    const auto path = dir / "anova.csv";
    std::ofstream out(path);
    ensure_open(out, path);
    out << "dataset,measure,h,f,p,df_between,df_within,significant\n";
    for (const auto& r : agg.anova)
      out << r.dataset << ',' << to_string(r.measure) << ',' << r.h << ',' << num(r.result.f) << ','
          << num(r.result.p) << ',' << r.result.df_between << ',' << r.result.df_within << ','
          << (r.result.significant ? 1 : 0) << '\n';
  }
  {
    const auto path = dir / "summary.csv";
    std::ofstream out(path);
    ensure_open(out, path);
    out << "dataset,strategy,mse,rank_MAPE,rank_SMAPE,rank_MASE,mean_rank\n";
    for (const auto& s : agg.summary) {
      out << s.dataset << ',' << s.strategy << ',' << num(s.mse);
      for (Measure m : kMeasures) {
        const auto it = s.average_rank.find(m);
        out << ',' << (it == s.average_rank.end() ? "nan" : num(it->second));
      }
      out << ',' << num(s.mean_rank) << '\n';
    }
  }
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir / "runs");
  fs::create_directories(dir / "traces");
  fs::create_directories(dir / "timings");
  {
    std::ofstream out(dir / "config.txt");
    ensure_open(out, dir / "config.txt");
    out << render_config(cfg);
  }
  {
    const auto path = dir / "forecasts.csv";
    std::ofstream out(path);
    ensure_open(out, path);
    out << "dataset,series,strategy,repetition,h,actual,forecast,mase_scale\n";
    for (const auto& r : forecast_rows(result.records))
      out << r.dataset << ',' << r.series << ',' << r.strategy << ',' << r.repetition << ',' << r.h << ','
          << num(r.actual) << ',' << num(r.forecast) << ',' << num(r.mase_scale) << '\n';
  }
  {
    const auto path = dir / "failures.csv";
    std::ofstream out(path);
    ensure_open(out, path);
    out << "dataset,series,strategy,repetition,error\n";
    for (const auto& r : result.records)
      if (!r.ok)
        out << r.dataset << ',' << r.series << ',' << to_string(r.method) << ',' << r.repetition << ','
            << sanitize(r.error) << '\n';
  }
  std::ofstream timings(dir / "timings.csv");
  ensure_open(timings, dir / "timings.csv");
  timings << "dataset,series,strategy,repetition,wall_seconds,cpu_seconds,fitness_evaluations\n";
  for (const auto& r : result.records) {
    const std::string stem = record_stem(r);
    {
      const auto path = dir / "runs" / (stem + "_s" + std::to_string(cfg.seed) + ".json");
      std::ofstream out(path);
      ensure_open(out, path);
      out << record_json(r, cfg).dump(2) << '\n';
    }
    timings << r.dataset << ',' << r.series << ',' << to_string(r.method) << ',' << r.repetition << ','
            << num(r.wall_seconds) << ',' << num(r.cpu_seconds) << ',' << r.evaluations << '\n';
    if (!r.trace) continue;
    const auto& t = *r.trace;
    const auto tpath = dir / "traces" / (stem + ".csv");
    std::ofstream trace(tpath);
    ensure_open(trace, tpath);
    trace << "generation,best_fitness,mean_fitness\n";
    const auto spath = dir / "timings" / (stem + ".csv");
    std::ofstream secs(spath);
    ensure_open(secs, spath);
    secs << "generation,seconds\n";
    for (std::size_t g = 0; g < t.rows(); ++g) {
      trace << g << ',' << num(t.best_fitness[g]) << ',' << num(t.mean_fitness[g]) << '\n';
      secs << g << ',' << num(t.seconds[g]) << '\n';
    }
  }
  write_aggregates(dir, result.aggregates);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto series = load_dataset(cfg);
  if (series.empty()) throw ConfigError("dataset contains no series");
  const std::string dataset = dataset_label(cfg);

  struct Job {
    std::size_t series;
    int repetition;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < series.size(); ++s)
    for (int r = 0; r < cfg.repetitions; ++r) jobs.push_back({s, r});

  std::vector<std::vector<RunRecord>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      results[i] = run_series(series[jobs[i].series], dataset, jobs[i].repetition, cfg);
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult out;
  for (auto& batch : results)
    for (auto& r : batch) {
      if (!r.ok) ++out.failures;
      out.records.push_back(std::move(r));
    }
  out.aggregates = aggregate(forecast_rows(out.records));
  write_outputs(cfg, out);
  return out;
}

namespace {

std::vector<std::vector<std::string>> read_csv_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(split(line, ','));
  }
  return rows;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<ForecastRow> read_forecasts(const fs::path& file) {
  std::vector<ForecastRow> out;
  for (const auto& f : read_csv_table(file)) {
    if (f.size() != 8) throw std::runtime_error("malformed forecasts row in " + file.string());
    out.push_back({f[0], f[1], f[2], std::stoi(f[3]), std::stoi(f[4]), to_double(f[5]), to_double(f[6]),
                   to_double(f[7])});
  }
  return out;
}

CompareResult compare_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw std::runtime_error("run directory " + run_dir.string() + " not found");
  CompareResult out;
  out.aggregates = aggregate(read_forecasts(run_dir / "forecasts.csv"));
  std::map<std::tuple<std::string, std::string, std::string, int>, double> fresh;
  for (const auto& r : out.aggregates.metrics) fresh[{r.dataset, r.strategy, to_string(r.measure), r.h}] = r.mean;
  const auto stored_path = run_dir / "metrics.csv";
  if (fs::exists(stored_path)) {
    for (const auto& f : read_csv_table(stored_path)) {
      if (f.size() != 6) throw std::runtime_error("malformed metrics row");
      const auto it = fresh.find({f[0], f[1], f[2], std::stoi(f[3])});
      const double stored = to_double(f[4]);
      if (it == fresh.end()) {
        out.max_metric_difference = std::numeric_limits<double>::infinity();
        continue;
      }
      if (std::isnan(stored) && std::isnan(it->second)) continue;
      out.max_metric_difference = std::max(out.max_metric_difference, std::abs(stored - it->second));
    }
  }
  write_aggregates(run_dir / "compare", out.aggregates);
  return out;
}

TraceExport export_traces(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir / "traces")) throw std::runtime_error("no traces directory in " + run_dir.string());
  TraceExport out;
  const fs::path dest = run_dir / "trace_export";
  fs::create_directories(dest);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(run_dir / "traces"))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const auto trace = read_csv_table(file);
    std::vector<std::vector<std::string>> secs;
    const auto timing_file = run_dir / "timings" / file.filename();
    if (fs::exists(timing_file)) secs = read_csv_table(timing_file);
    std::ofstream o(dest / file.filename());
    ensure_open(o, dest / file.filename());
    o << "generation,best_fitness,mean_fitness,seconds\n";
    for (std::size_t g = 0; g < trace.size(); ++g) {
      o << trace[g][0] << ',' << trace[g][1] << ',' << trace[g][2] << ','
        << (g < secs.size() ? secs[g][1] : std::string("nan")) << '\n';
      ++out.rows;
    }
    ++out.traces;
  }

  const auto timing_path = run_dir / "timings.csv";
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> cpu;
  if (fs::exists(timing_path)) {
    for (const auto& f : read_csv_table(timing_path)) {
      if (f.size() < 6) continue;
      const std::pair<std::string, std::string> key{f[2], f[0]};
      if (!cpu.count(key)) order.push_back(key);
      auto& acc = cpu[key];
      acc.first += to_double(f[5]);
      ++acc.second;
    }
  }
  std::ofstream summary(run_dir / "timing_summary.csv");
  ensure_open(summary, run_dir / "timing_summary.csv");
  summary << "strategy,dataset,mean_cpu_seconds\n";
  for (const auto& key : order) {
    const auto& acc = cpu[key];
    summary << key.first << ',' << key.second << ',' << num(acc.first / acc.second) << '\n';
  }
  return out;
}

}  // namespace msf
