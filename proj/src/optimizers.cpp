#include "msf/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace msf {

double inertia_weight(int t, int total, double w_max, double w_min) {
  if (total < 1) throw std::invalid_argument("iteration count must be positive");
  if (t < 0 || t > total) throw std::invalid_argument("iteration index outside 0..T");
  return (w_max - w_min) * static_cast<double>(total - t) / static_cast<double>(total) + w_min;
}

std::vector<double> update_velocity(const Particle& particle, const BinaryMask& gbest, double w, double c1, double c2,
                                    double v_max, Rng& rng) {
  const std::size_t dims = particle.position.size();
  if (particle.velocity.size() != dims || particle.pbest.size() != dims || gbest.size() != dims)
    throw std::invalid_argument("particle dimensions do not match");
  std::vector<double> v(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const double r1 = unit_uniform(rng);
    const double r2 = unit_uniform(rng);
    const double p = particle.position.bits[d];
    const double raw = w * particle.velocity[d] + c1 * r1 * (particle.pbest.bits[d] - p) + c2 * r2 * (gbest.bits[d] - p);
    v[d] = std::clamp(raw, -v_max, v_max);
  }
  return v;
}

BinaryMask position_update(std::span<const double> velocity, Rng& rng) {
  BinaryMask out;
  out.bits.resize(velocity.size());
  for (std::size_t d = 0; d < velocity.size(); ++d) out.bits[d] = unit_uniform(rng) < velocity_probability(velocity[d]);
  return out;
}

BinaryMask random_mask(std::size_t length, Rng& rng) {
  BinaryMask out;
  out.bits.resize(length);
  for (auto& b : out.bits) b = unit_uniform(rng) < 0.5;
  return out;
}

std::vector<double> evaluate_batch(const FitnessFunction& fitness, const std::vector<BinaryMask>& masks, int workers) {
  std::vector<double> out(masks.size(), std::numeric_limits<double>::infinity());
  auto run = [&](std::size_t i) {
    try {
      out[i] = fitness(masks[i]);
    } catch (const std::exception&) {
      out[i] = std::numeric_limits<double>::infinity();
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || masks.size() < 2) {
    for (std::size_t i = 0; i < masks.size(); ++i) run(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(threads, masks.size()); ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < masks.size(); i += threads) run(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

namespace {

double finite_mean(std::span<const double> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values)
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::infinity();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Lowest fitness, lowest index on ties.
std::size_t argmin(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best]) best = i;
  return best;
}

}  // namespace

OptimizerResult pso_run(const FitnessFunction& fitness, std::size_t mask_length, const SwarmConfig& cfg) {
  if (cfg.swarm_size < 2) throw std::invalid_argument("swarm needs at least two particles");
  if (cfg.iterations < 1) throw std::invalid_argument("swarm needs at least one iteration");
  if (cfg.w_max < cfg.w_min) throw std::invalid_argument("w_max must not be below w_min");
  if (!(cfg.v_max > 0.0)) throw std::invalid_argument("v_max must be positive");

  Rng rng(cfg.seed);
  std::vector<Particle> swarm(static_cast<std::size_t>(cfg.swarm_size));
  for (auto& p : swarm) {
    p.position = random_mask(mask_length, rng);
    p.velocity.assign(mask_length, 0.0);
    p.pbest = p.position;
  }

  OptimizerResult result;
  result.best = swarm.front().position;
  int since_improvement = 0;
  for (int t = 0; t <= cfg.iterations; ++t) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<BinaryMask> positions;
    for (const auto& p : swarm) positions.push_back(p.position);
    const auto fit = evaluate_batch(fitness, positions, cfg.workers);
    result.evaluations += positions.size();

    std::vector<double> pbest_fit(swarm.size());
    for (std::size_t i = 0; i < swarm.size(); ++i) {
      if (fit[i] < swarm[i].pbest_fitness) {
        swarm[i].pbest = swarm[i].position;
        swarm[i].pbest_fitness = fit[i];
      }
      pbest_fit[i] = swarm[i].pbest_fitness;
    }
    const std::size_t leader = argmin(pbest_fit);
    bool improved = false;
    if (pbest_fit[leader] < result.best_fitness || t == 0) {
      improved = pbest_fit[leader] < result.best_fitness;
      result.best = swarm[leader].pbest;
      result.best_fitness = pbest_fit[leader];
    }
    since_improvement = improved ? 0 : since_improvement + 1;

    if (t < cfg.iterations) {
      const double w = inertia_weight(t, cfg.iterations, cfg.w_max, cfg.w_min);
      for (auto& p : swarm) {
        p.velocity = update_velocity(p, result.best, w, cfg.c1, cfg.c2, cfg.v_max, rng);
        p.position = position_update(p.velocity, rng);
      }
    }
    result.trace.best_fitness.push_back(result.best_fitness);
    result.trace.mean_fitness.push_back(finite_mean(fit));
    result.trace.seconds.push_back(seconds_since(start));
    if (cfg.stall_generations > 0 && since_improvement >= cfg.stall_generations) break;
  }
  return result;
}

std::pair<BinaryMask, BinaryMask> two_point_crossover(const BinaryMask& a, const BinaryMask& b, std::size_t cut1,
                                                      std::size_t cut2) {
  if (a.size() != b.size()) throw std::invalid_argument("parents differ in length");
  if (cut1 > cut2 || cut2 > a.size()) throw std::invalid_argument("invalid crossover cut points");
  BinaryMask c1 = a, c2 = b;
  for (std::size_t i = cut1; i < cut2; ++i) std::swap(c1.bits[i], c2.bits[i]);
  return {std::move(c1), std::move(c2)};
}

std::vector<double> roulette_probabilities(std::span<const double> fitness) {
  std::vector<double> w(fitness.size(), 0.0);
  double worst = -std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (double f : fitness)
    if (std::isfinite(f)) {
      worst = std::max(worst, f);
      best = std::min(best, f);
    }
  if (!std::isfinite(worst)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  const double eps = worst > best ? 1e-3 * (worst - best) : 1.0;
  for (std::size_t i = 0; i < fitness.size(); ++i)
    if (std::isfinite(fitness[i])) w[i] = (worst - fitness[i]) + eps;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return w;
}

namespace {

std::size_t roulette_draw(std::span<const double> probs, Rng& rng) {
  const double u = unit_uniform(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return probs.size() - 1;
}

}  // namespace

std::vector<BinaryMask> next_generation(const std::vector<BinaryMask>& population, std::span<const double> fitness,
                                        const GaConfig& cfg, Rng& rng, GenerationLog* log) {
  const std::size_t n = population.size();
  if (n == 0 || fitness.size() != n) throw std::invalid_argument("population and fitness sizes differ");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });

  const auto keep = static_cast<std::size_t>(
      std::clamp<long long>(std::llround(cfg.top_fraction * static_cast<double>(n)), 1, static_cast<long long>(n)));
  const auto probs = roulette_probabilities(fitness);

  std::vector<BinaryMask> next;
  next.reserve(n);
  next.push_back(population[order.front()]);
  for (std::size_t i = 1; i < keep; ++i)
    next.push_back(cfg.selection == Selection::top_percent ? population[order[i]]
                                                           : population[roulette_draw(probs, rng)]);
  if (log) log->survivors = next;

  auto draw_parent = [&]() -> const BinaryMask& {
    if (cfg.selection == Selection::roulette) return population[roulette_draw(probs, rng)];
    return population[order[uniform_index(rng, keep)]];
  };

  const std::size_t length = population.front().size();
  while (next.size() < n) {
    const BinaryMask& a = draw_parent();
    const BinaryMask& b = draw_parent();
    if (log) log->parents.emplace_back(a, b);
    std::pair<BinaryMask, BinaryMask> children{a, b};
    if (unit_uniform(rng) < cfg.crossover_prob && length >= 2) {
      std::size_t c1 = 1 + uniform_index(rng, length - 1);
      std::size_t c2 = 1 + uniform_index(rng, length - 1);
      if (c1 > c2) std::swap(c1, c2);
      children = two_point_crossover(a, b, c1, c2);
    }
    next.push_back(std::move(children.first));
    if (next.size() < n) next.push_back(std::move(children.second));
  }

  for (std::size_t i = 1; i < n; ++i)
    for (auto& bit : next[i].bits)
      if (unit_uniform(rng) < cfg.mutation_prob) bit ^= 1;
  return next;
}

OptimizerResult ga_run(const FitnessFunction& fitness, std::size_t mask_length, const GaConfig& cfg) {
  if (cfg.population < 2) throw std::invalid_argument("population needs at least two chromosomes");
  if (cfg.iterations < 1) throw std::invalid_argument("GA needs at least one generation");
  for (double p : {cfg.crossover_prob, cfg.mutation_prob, cfg.top_fraction})
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("GA probabilities must lie in [0, 1]");

  Rng rng(cfg.seed);
  std::vector<BinaryMask> population;
  for (int i = 0; i < cfg.population; ++i) population.push_back(random_mask(mask_length, rng));

  OptimizerResult result;
  int since_improvement = 0;
  for (int g = 0; g <= cfg.iterations; ++g) {
    const auto start = std::chrono::steady_clock::now();
    const auto fit = evaluate_batch(fitness, population, cfg.workers);
    result.evaluations += population.size();
    const std::size_t leader = argmin(fit);
    const bool improved = fit[leader] < result.best_fitness;
    if (improved || g == 0) {
      result.best = population[leader];
      result.best_fitness = fit[leader];
    }
    since_improvement = improved ? 0 : since_improvement + 1;
    if (g < cfg.iterations) population = next_generation(population, fit, cfg, rng);
    result.trace.best_fitness.push_back(result.best_fitness);
    result.trace.mean_fitness.push_back(finite_mean(fit));
    result.trace.seconds.push_back(seconds_since(start));
    if (cfg.stall_generations > 0 && since_improvement >= cfg.stall_generations) break;
  }
  return result;
}

double CachedFitness::operator()(const BinaryMask& mask) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(mask); it != memo_.end()) return it->second;
  }
  const double value = inner_(mask);
  std::lock_guard lock(mutex_);
  return memo_.try_emplace(mask, value).first->second;
}

FitnessContext make_fitness_context(const PreparedSeries& prepared, int horizon, FitContext fit) {
  FitnessContext ctx;
  ctx.values = prepared.values;
  ctx.horizon = horizon;
  ctx.validation_len = default_validation_len(horizon);
  ctx.fit = std::move(fit);
  if (ctx.values.size() <= ctx.validation_len)
    throw std::invalid_argument("estimation sample too short for a validation block of " +
                                std::to_string(ctx.validation_len));
  return ctx;
}

double evaluate_fitness(const BinaryMask& mask, const FitnessContext& ctx) {
  const auto partition = decode_partition(mask, ctx.horizon);
  const std::size_t n = ctx.values.size();
  const auto h = static_cast<std::size_t>(ctx.horizon);
  if (ctx.validation_len < h || ctx.validation_len >= n) throw std::invalid_argument("invalid validation block");
  const std::size_t train_len = n - ctx.validation_len;
  const std::span<const double> all(ctx.values);
  try {
    const auto segments = fit_segments(all.first(train_len), partition, ctx.fit);
    double sse = 0.0;
    std::size_t count = 0;
    for (std::size_t origin = train_len; origin + h <= n; ++origin) {
      const Eigen::VectorXd pred =
          forecast_model_space(StrategyKind::partitioned, segments, ctx.horizon, all.first(origin));
      for (std::size_t k = 0; k < h; ++k) {
        const double e = pred(static_cast<Index>(k)) - ctx.values[origin + k];
        sse += e * e;
      }
      count += h;
    }
    const double value = sse / static_cast<double>(count);
    return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace msf
