#pragma once

#include "msf/random.hpp"
#include "msf/strategies.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <vector>

namespace msf {

struct SwarmConfig {
  int swarm_size = 20;
  int iterations = 100;
  double c1 = 2.0;
  double c2 = 2.0;
  double w_max = 0.9;
  double w_min = 0.4;
  double v_max = 4.0;
  std::uint64_t seed = 0;
  int workers = 1;
  int stall_generations = 0;  // 0 disables early stopping
};

struct Particle {
  BinaryMask position;
  std::vector<double> velocity;
  BinaryMask pbest;
  double pbest_fitness = std::numeric_limits<double>::infinity();
};

enum class Selection { roulette, top_percent };

struct GaConfig {
  int population = 20;
  int iterations = 100;
  double crossover_prob = 0.90;
  double mutation_prob = 0.02;
  Selection selection = Selection::top_percent;
  double top_fraction = 0.5;  // share of the population kept each generation
  std::uint64_t seed = 0;
  int workers = 1;
  int stall_generations = 0;
};

/// Per generation (the initial population is generation 0).
struct ConvergenceTrace {
  std::vector<double> best_fitness;  // best so far
  std::vector<double> mean_fitness;  // mean over finite fitness values of the generation
  std::vector<double> seconds;       // wall clock spent in the generation
  std::size_t rows() const { return best_fitness.size(); }
};

struct OptimizerResult {
  BinaryMask best;
  double best_fitness = std::numeric_limits<double>::infinity();
  ConvergenceTrace trace;
  std::size_t evaluations = 0;
};

using FitnessFunction = std::function<double(const BinaryMask&)>;

/// Linearly annealed inertia (w_max - w_min) (T - t) / T + w_min.
double inertia_weight(int t, int total, double w_max, double w_min);

/// Probability that a bit is set for velocity v: 1 / (1 + exp(-v)).
inline double velocity_probability(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// w v + c1 r1 (pbest - p) + c2 r2 (gbest - p) with fresh r1, r2 per dimension, clamped to
/// [-v_max, v_max].
std::vector<double> update_velocity(const Particle& particle, const BinaryMask& gbest, double w, double c1, double c2,
                                    double v_max, Rng& rng);

/// Bit d is set iff a fresh uniform draw is below S(v_d).
BinaryMask position_update(std::span<const double> velocity, Rng& rng);

BinaryMask random_mask(std::size_t length, Rng& rng);

/// Evaluates masks, optionally on several threads. Results are in input order and do not
/// depend on the worker count; exceptions become +inf.
std::vector<double> evaluate_batch(const FitnessFunction& fitness, const std::vector<BinaryMask>& masks,
                                   int workers = 1);

OptimizerResult pso_run(const FitnessFunction& fitness, std::size_t mask_length, const SwarmConfig& cfg);

/// Swaps bits in [cut1, cut2) between the parents.
std::pair<BinaryMask, BinaryMask> two_point_crossover(const BinaryMask& a, const BinaryMask& b, std::size_t cut1,
                                                      std::size_t cut2);

/// Roulette weights for minimisation: f' = (worst - f) + eps over finite values, normalised.
std::vector<double> roulette_probabilities(std::span<const double> fitness);

struct GenerationLog {
  std::vector<BinaryMask> survivors;
  std::vector<std::pair<BinaryMask, BinaryMask>> parents;
};

/// One selection/crossover/mutation step. The first member of the result is the current
/// generation's best, which is exempt from mutation.
std::vector<BinaryMask> next_generation(const std::vector<BinaryMask>& population, std::span<const double> fitness,
                                        const GaConfig& cfg, Rng& rng, GenerationLog* log = nullptr);

OptimizerResult ga_run(const FitnessFunction& fitness, std::size_t mask_length, const GaConfig& cfg);

/// Counts fitness calls (thread safe).
class CountingFitness {
 public:
  explicit CountingFitness(FitnessFunction inner) : inner_(std::move(inner)) {}
  double operator()(const BinaryMask& mask) {
    ++count_;
    return inner_(mask);
  }
  std::size_t count() const { return count_.load(); }
  FitnessFunction function() {
    return [this](const BinaryMask& m) { return (*this)(m); };
  }

 private:
  FitnessFunction inner_;
  std::atomic<std::size_t> count_{0};
};

/// Memoises fitness by mask bits.
class CachedFitness {
 public:
  explicit CachedFitness(FitnessFunction inner) : inner_(std::move(inner)) {}
  double operator()(const BinaryMask& mask);
  FitnessFunction function() {
    return [this](const BinaryMask& m) { return (*this)(m); };
  }

 private:
  FitnessFunction inner_;
  std::mutex mutex_;
  std::map<BinaryMask, double> memo_;
};

/// Data and settings behind the horizon-partition fitness. Sub-models are trained on the
/// estimation sample minus its last `validation_len` points and scored by rolling H-step
/// forecasts from every origin inside that block.
struct FitnessContext {
  std::vector<double> values;  // model-space estimation sample
  int horizon = 18;
  std::size_t validation_len = 36;
  FitContext fit;
};

inline std::size_t default_validation_len(int horizon) {
  return static_cast<std::size_t>(std::max(2 * horizon, 36));
}

FitnessContext make_fitness_context(const PreparedSeries& prepared, int horizon, FitContext fit);

/// Mean squared H-step error over the validation block; +inf when any sub-model fails.
double evaluate_fitness(const BinaryMask& mask, const FitnessContext& ctx);

}  // namespace msf
