#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>

#include "env.hpp"
#include "random.hpp"

namespace tutorsim {

using Logits = std::array<double, kNumColors>;
using ActionDistribution = std::array<double, kNumColors>;

// Numerically stable softmax of logits / temperature.
inline ActionDistribution softmax(std::span<const double, kNumColors> logits, double temperature = 1.0) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("softmax: temperature must be a positive finite number");
  double hi = -std::numeric_limits<double>::infinity();
  for (double l : logits) {
    if (!std::isfinite(l)) throw std::invalid_argument("softmax: logits must be finite");
    hi = std::max(hi, l);
  }
  ActionDistribution p{};
  double z = 0.0;
  for (std::size_t i = 0; i < kNumColors; ++i) {
    p[i] = std::exp((logits[i] - hi) / temperature);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

// Tabular two-pick policy: a distribution over the first ball and, for each
// possible first ball, a distribution over the second.
struct PolicyTable {
  Logits first_logits{};
  std::array<Logits, kNumColors> second_logits{};
  double temperature = 1.0;

  ActionDistribution first_probs() const { return softmax(first_logits, temperature); }
  ActionDistribution second_probs(BallColor given_first) const {
    return softmax(second_logits[index(given_first)], temperature);
  }

  double trajectory_prob(Trajectory t) const {
    return first_probs()[index(t.first)] * second_probs(t.first)[index(t.second)];
  }

  // Throws std::invalid_argument on non-finite logits or non-positive temperature.
  void validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw std::invalid_argument("policy: temperature must be positive");
    auto finite = [](const Logits& l) { return std::ranges::all_of(l, [](double v) { return std::isfinite(v); }); };
    if (!finite(first_logits) || !std::ranges::all_of(second_logits, finite))
      throw std::invalid_argument("policy: logits must be finite");
  }

  friend bool operator==(const PolicyTable&, const PolicyTable&) = default;
};

// One PolicyTable per goal (pi(. | g)).
struct GoalConditionedPolicy {
  std::array<PolicyTable, kNumGoals> tables{};

  PolicyTable& operator[](Goal g) { return tables[index(g)]; }
  const PolicyTable& operator[](Goal g) const { return tables[index(g)]; }

  friend bool operator==(const GoalConditionedPolicy&, const GoalConditionedPolicy&) = default;
};

inline constexpr std::array<Trajectory, kNumTrajectories> enumerate_trajectories() {
  std::array<Trajectory, kNumTrajectories> out{};
  for (std::size_t i = 0; i < kNumTrajectories; ++i) out[i] = Trajectory::from_index(i);
  return out;
}

inline Trajectory sample_trajectory(const PolicyTable& table, Rng& rng) {
  const auto first = color_at(sample_index(table.first_probs(), rng));
  const auto second = color_at(sample_index(table.second_probs(first), rng));
  return {first, second};
}

inline Trajectory sample_trajectory(const GoalConditionedPolicy& pol, Goal g, Rng& rng) {
  return sample_trajectory(pol[g], rng);
}

inline double trajectory_prob(const GoalConditionedPolicy& pol, Goal g, Trajectory t) {
  return pol[g].trajectory_prob(t);
}

// Full joint distribution over the 9 trajectories, in enumeration order.
inline std::array<double, kNumTrajectories> trajectory_distribution(const PolicyTable& table) {
  std::array<double, kNumTrajectories> out{};
  const auto first = table.first_probs();
  for (auto c : kAllColors) {
    const auto second = table.second_probs(c);
    for (auto d : kAllColors) out[Trajectory{c, d}.index()] = first[index(c)] * second[index(d)];
  }
  return out;
}

template <class RewardFn>
double expected_reward(const PolicyTable& table, RewardFn&& reward_fn) {
  const auto dist = trajectory_distribution(table);
  double total = 0.0;
  for (std::size_t i = 0; i < kNumTrajectories; ++i) total += dist[i] * reward_fn(Trajectory::from_index(i));
  return total;
}

template <class RewardFn>
double expected_reward(const GoalConditionedPolicy& pol, Goal g, RewardFn&& reward_fn) {
  return expected_reward(pol[g], std::forward<RewardFn>(reward_fn));
}

// Most likely trajectory; ties go to the lowest enumeration index.
inline Trajectory greedy_trajectory(const PolicyTable& table) {
  const auto dist = trajectory_distribution(table);
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumTrajectories; ++i)
    if (dist[i] > dist[best]) best = i;
  return Trajectory::from_index(best);
}

inline Trajectory greedy_trajectory(const GoalConditionedPolicy& pol, Goal g) { return greedy_trajectory(pol[g]); }

// argmax with lowest-index tie-break.
template <std::size_t N>
std::size_t argmax(const std::array<double, N>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < N; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace tutorsim
