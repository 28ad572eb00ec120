#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "policy.hpp"
#include "random.hpp"

namespace tutorsim {

// Same shape as the logits of a PolicyTable.
struct GradientEstimate {
  Logits first{};
  std::array<Logits, kNumColors> second{};

  static constexpr std::size_t kSize = kNumColors + kNumColors * kNumColors;

  double& at(std::size_t i) { return i < kNumColors ? first[i] : second[(i - kNumColors) / kNumColors][i % kNumColors]; }
  double at(std::size_t i) const { return const_cast<GradientEstimate&>(*this).at(i); }

  GradientEstimate& operator+=(const GradientEstimate& o) {
    for (std::size_t i = 0; i < kSize; ++i) at(i) += o.at(i);
    return *this;
  }
  GradientEstimate& operator*=(double s) {
    for (std::size_t i = 0; i < kSize; ++i) at(i) *= s;
    return *this;
  }
  double norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < kSize; ++i) s += at(i) * at(i);
    return std::sqrt(s);
  }
  double max_abs_diff(const GradientEstimate& o) const {
    double m = 0.0;
    for (std::size_t i = 0; i < kSize; ++i) m = std::max(m, std::abs(at(i) - o.at(i)));
    return m;
  }
  bool finite() const {
    for (std::size_t i = 0; i < kSize; ++i)
      if (!std::isfinite(at(i))) return false;
    return true;
  }
};

// Flat views of a table's logits, in GradientEstimate order.
inline double& logit_at(PolicyTable& t, std::size_t i) {
  return i < kNumColors ? t.first_logits[i] : t.second_logits[(i - kNumColors) / kNumColors][i % kNumColors];
}
inline double logit_at(const PolicyTable& t, std::size_t i) { return logit_at(const_cast<PolicyTable&>(t), i); }

struct SgConfig {
  double learning_rate = 0.1;
  double baseline_decay = 0.9;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("optimizer.learning_rate: must be positive");
    if (!(baseline_decay >= 0.0 && baseline_decay < 1.0))
      throw std::invalid_argument("optimizer.baseline_decay: must lie in [0, 1)");
  }
  friend bool operator==(const SgConfig&, const SgConfig&) = default;
};

enum class FitnessMode { Exact, MonteCarlo };

struct EsConfig {
  int population = 16;
  double sigma = 0.5;
  double learning_rate = 0.1;
  FitnessMode fitness_mode = FitnessMode::Exact;
  int monte_carlo_samples = 32;

  void validate() const {
    if (population < 2) throw std::invalid_argument("optimizer.es.population: must be at least 2");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("optimizer.es.sigma: must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("optimizer.es.learning_rate: must be positive");
    if (fitness_mode == FitnessMode::MonteCarlo && monte_carlo_samples < 1)
      throw std::invalid_argument("optimizer.es.monte_carlo_samples: must be positive");
  }
  friend bool operator==(const EsConfig&, const EsConfig&) = default;
};

enum class Backend { ScoreFunction, EvolutionStrategies };

struct OptimizerConfig {
  Backend backend = Backend::ScoreFunction;
  SgConfig sg{};
  EsConfig es{};

  void validate() const {
    sg.validate();
    es.validate();
  }
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

// d log softmax(logits)[chosen] / d logits.
inline Logits log_softmax_grad(const Logits& logits, std::size_t chosen, double temperature) {
  const auto p = softmax(logits, temperature);
  Logits g{};
  for (std::size_t i = 0; i < kNumColors; ++i) g[i] = ((i == chosen ? 1.0 : 0.0) - p[i]) / temperature;
  return g;
}

// In-place REINFORCE step on a single logit row.
inline void reinforce_row(Logits& logits, std::size_t chosen, double advantage, double lr, double temperature) {
  if (advantage == 0.0) return;
  const auto g = log_softmax_grad(logits, chosen, temperature);
  for (std::size_t i = 0; i < kNumColors; ++i) logits[i] += lr * advantage * g[i];
}

// advantage * grad log P(traj). Its expectation under the policy is the exact
// gradient of expected reward when advantage = reward - constant.
inline GradientEstimate score_function_direction(const PolicyTable& table, Trajectory traj, double advantage) {
  GradientEstimate d;
  const auto gf = log_softmax_grad(table.first_logits, index(traj.first), table.temperature);
  const auto gs = log_softmax_grad(table.second_logits[index(traj.first)], index(traj.second), table.temperature);
  for (std::size_t i = 0; i < kNumColors; ++i) {
    d.first[i] = advantage * gf[i];
    d.second[index(traj.first)][i] = advantage * gs[i];
  }
  return d;
}

inline PolicyTable score_function_update(PolicyTable table, Trajectory traj, double reward, double baseline,
                                         const SgConfig& cfg) {
  if (!std::isfinite(reward)) throw std::invalid_argument("score_function_update: reward must be finite");
  const double adv = reward - baseline;
  reinforce_row(table.first_logits, index(traj.first), adv, cfg.learning_rate, table.temperature);
  reinforce_row(table.second_logits[index(traj.first)], index(traj.second), adv, cfg.learning_rate,
                table.temperature);
  return table;
}

inline double update_baseline(double baseline, double reward, double decay) {
  return decay * baseline + (1.0 - decay) * reward;
}

// Analytic gradient of sum_t P(t) r(t) with respect to every logit of one table.
template <class RewardFn>
GradientEstimate exact_gradient(const PolicyTable& table, RewardFn&& reward_fn) {
  GradientEstimate grad;
  const auto dist = trajectory_distribution(table);
  for (std::size_t k = 0; k < kNumTrajectories; ++k) {
    const auto t = Trajectory::from_index(k);
    auto d = score_function_direction(table, t, dist[k] * reward_fn(t));
    grad += d;
  }
  return grad;
}

template <class RewardFn>
GradientEstimate exact_gradient(const GoalConditionedPolicy& pol, Goal g, RewardFn&& reward_fn) {
  return exact_gradient(pol[g], std::forward<RewardFn>(reward_fn));
}

// One mirrored-sampling evolution-strategies step on the table of goal g.
//
// `fitness` is called as fitness(policy, rng) or fitness(policy); each
// perturbation gets its own deterministic sub-stream. Fitness values are
// standardized across the population before weighting the noise.
template <class Fitness>
GoalConditionedPolicy es_step(const GoalConditionedPolicy& pol, Goal g, Fitness&& fitness, const EsConfig& cfg,
                              Rng& rng) {
  cfg.validate();
  constexpr std::size_t dim = GradientEstimate::kSize;
  const std::size_t pop = static_cast<std::size_t>(cfg.population);
  const std::size_t pairs = pop / 2;
  const std::uint64_t base = rng();

  std::vector<std::array<double, dim>> noise(pop);
  std::vector<double> fit(pop);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t k = 0; k < pop; ++k) {
    Rng sub(derive_seed({base, k}));
    if (k < 2 * pairs) {
      if (k % 2 == 0) {
        Rng noise_rng(derive_seed({base, 0x4e4f495345ULL, k / 2}));
        for (auto& v : noise[k]) v = gauss(noise_rng);
      } else {
        for (std::size_t i = 0; i < dim; ++i) noise[k][i] = -noise[k - 1][i];
      }
    } else {
      noise[k].fill(0.0);  // odd population: unperturbed center
    }
    GoalConditionedPolicy candidate = pol;
    for (std::size_t i = 0; i < dim; ++i) logit_at(candidate[g], i) += cfg.sigma * noise[k][i];

    if constexpr (std::is_invocable_r_v<double, Fitness, const GoalConditionedPolicy&, Rng&>)
      fit[k] = fitness(std::as_const(candidate), sub);
    else
      fit[k] = fitness(std::as_const(candidate));
    if (!std::isfinite(fit[k]))
      throw std::runtime_error("es_step: non-finite fitness for population member " + std::to_string(k));
  }

  double mean = 0.0;
  for (double f : fit) mean += f;
  mean /= static_cast<double>(pop);
  double var = 0.0;
  for (double f : fit) var += (f - mean) * (f - mean);
  const double sd = std::sqrt(var / static_cast<double>(pop));

  GoalConditionedPolicy out = pol;
  if (sd < 1e-12) return out;

  const double scale = cfg.learning_rate / (cfg.sigma * static_cast<double>(pop));
  for (std::size_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < pop; ++k) acc += (fit[k] - mean) / sd * noise[k][i];
    logit_at(out[g], i) += scale * acc;
  }
  return out;
}

}  // namespace tutorsim
