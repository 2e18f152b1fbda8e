// msf: multi-step forecasting experiment harness.

#include "msf/datagen.hpp"
#include "msf/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

int cmd_generate(const std::string& preset, const std::vector<int>& rows, const fs::path& out, bool single_file) {
  const auto series = msf::preset_series(preset, rows);
  if (single_file) {
    msf::write_csv_series(out, series);
    std::cout << "wrote " << series.size() << " series to " << out.string() << '\n';
    return kOk;
  }
  fs::create_directories(out);
  for (const auto& s : series) msf::write_csv_series(out / (s.name + ".csv"), {s});
  std::cout << "wrote " << series.size() << " series to " << out.string() << '\n';
  return kOk;
}

void print_table(const msf::Aggregates& agg) {
  std::map<std::tuple<std::string, std::string, msf::Measure>, std::vector<double>> curves;
  std::vector<std::pair<std::string, std::string>> order;
  int horizon = 0;
  for (const auto& m : agg.metrics) {
    auto& v = curves[{m.dataset, m.strategy, m.measure}];
    if (v.empty() && m.measure == msf::Measure::mape) order.emplace_back(m.dataset, m.strategy);
    v.push_back(m.mean);
    horizon = std::max(horizon, m.h);
  }
  if (horizon == 0) {
    std::printf("no successful runs to tabulate\n");
    return;
  }
  std::vector<int> ends;
  for (int e : {6, 12}) if (e < horizon) ends.push_back(e);
  ends.push_back(horizon);

  for (msf::Measure measure : msf::kMeasures) {
    std::printf("\n%s\n%-12s %-12s", msf::to_string(measure).c_str(), "dataset", "strategy");
    for (int e : ends) std::printf("  %10s", ("1-" + std::to_string(e)).c_str());
    std::printf("  %8s\n", "rank");
    for (const auto& [ds, st] : order) {
      const auto& v = curves[{ds, st, measure}];
      std::printf("%-12s %-12s", ds.c_str(), st.c_str());
      for (int e : ends) std::printf("  %10.4f", msf::average_over_horizons(v, 1, e));
      double rank = 0.0;
      for (const auto& s : agg.summary)
        if (s.dataset == ds && s.strategy == st) rank = s.average_rank.at(measure);
      std::printf("  %8.3f\n", rank);
    }
  }
  std::printf("\n%-12s %-12s %14s %10s\n", "dataset", "strategy", "holdout_mse", "mean_rank");
  for (const auto& s : agg.summary)
    std::printf("%-12s %-12s %14.6g %10.3f\n", s.dataset.c_str(), s.strategy.c_str(), s.mse, s.mean_rank);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-step-ahead forecasting strategies with binary PSO/GA horizon partitioning"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write simulated series to CSV");
  std::string preset;
  std::vector<int> rows;
  fs::path gen_out = "data";
  bool single_file = false;
  gen->add_option("--preset", preset, "logistic-20 or mackey-glass-20")->required();
  gen->add_option("--rows", rows, "Preset rows to emit (1-based, default all)")->delimiter(',');
  gen->add_option("--out", gen_out, "Output directory (or file with --single-file)");
  gen->add_flag("--single-file", single_file, "Write all series into one wide CSV");

  auto* run = app.add_subcommand("run", "Run an experiment");
  fs::path config_path;
  std::string profile = "paper";
  fs::path run_out;
  int workers = 0;
  std::uint64_t seed = 0;
  run->add_option("--config", config_path, "Config file (key = value)");
  run->add_option("--profile", profile, "Preset sizes")->check(CLI::IsMember({"paper", "desk"}));
  auto* out_opt = run->add_option("--out", run_out, "Output directory");
  auto* workers_opt = run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "Base seed");

  auto* compare = app.add_subcommand("compare", "Rebuild metric, rank and ANOVA tables from a run");
  fs::path compare_dir;
  compare->add_option("--run", compare_dir, "Run directory")->required();

  auto* trace = app.add_subcommand("trace", "Export convergence traces and a timing summary");
  fs::path trace_dir;
  trace->add_option("--run", trace_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_generate(preset, rows, gen_out, single_file);

    if (*run) {
      msf::ExperimentConfig cfg = msf::profile_config(profile);
      if (!config_path.empty()) cfg = msf::load_config(config_path, cfg);
      if (*out_opt) cfg.out_dir = run_out;
      if (*workers_opt) cfg.workers = workers;
      if (*seed_opt) cfg.seed = seed;
      const auto result = msf::run_experiment(cfg);
      print_table(result.aggregates);
      std::printf("\n%zu records, %zu failures, outputs in %s\n", result.records.size(), result.failures,
                  cfg.out_dir.string().c_str());
      return result.failures ? kPartial : kOk;
    }

    if (*compare) {
      const auto res = msf::compare_run(compare_dir);
      print_table(res.aggregates);
      std::printf("\nmax |recomputed - stored| metric mean: %.3g\n", res.max_metric_difference);
      return kOk;
    }

    if (*trace) {
      const auto res = msf::export_traces(trace_dir);
      std::printf("exported %zu traces (%zu rows) to %s\n", res.traces, res.rows,
                  (trace_dir / "trace_export").string().c_str());
      std::ifstream summary(trace_dir / "timing_summary.csv");
      std::cout << summary.rdbuf();
      return kOk;
    }
  } catch (const msf::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
