#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "env.hpp"
#include "optimize.hpp"
#include "policy.hpp"
#include "random.hpp"

namespace tutorsim {

enum class TutorMode { Naive, Pedagogical };
enum class DemoSelection { Greedy, Sample };

// How the pedagogical tutor scores its own goal prediction.
//   Argmax:        1 if the unique most probable goal is the pursued one, else 0.
//   PosteriorMass: posterior probability of the pursued goal.
enum class PredictionScore { Argmax, PosteriorMass };

inline std::string_view to_string(TutorMode m) { return m == TutorMode::Naive ? "naive" : "pedagogical"; }
inline TutorMode parse_tutor_mode(std::string_view s) {
  if (s == "naive") return TutorMode::Naive;
  if (s == "pedagogical") return TutorMode::Pedagogical;
  throw std::invalid_argument("unknown tutor mode '" + std::string(s) + "' (expected naive|pedagogical)");
}
inline std::string_view to_string(DemoSelection d) { return d == DemoSelection::Greedy ? "greedy" : "sample"; }
inline DemoSelection parse_demo_selection(std::string_view s) {
  if (s == "greedy") return DemoSelection::Greedy;
  if (s == "sample") return DemoSelection::Sample;
  throw std::invalid_argument("unknown demo selection '" + std::string(s) + "' (expected greedy|sample)");
}

inline std::string_view to_string(PredictionScore p) {
  return p == PredictionScore::Argmax ? "argmax" : "posterior";
}
inline PredictionScore parse_prediction_score(std::string_view s) {
  if (s == "argmax") return PredictionScore::Argmax;
  if (s == "posterior") return PredictionScore::PosteriorMass;
  throw std::invalid_argument("unknown prediction score '" + std::string(s) + "' (expected argmax|posterior)");
}

using GoalDistribution = std::array<double, kNumGoals>;

inline void validate_goal_distribution(const GoalDistribution& d, const char* field) {
  double sum = 0.0;
  for (double v : d) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument(std::string(field) + ": entries must be >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(std::string(field) + ": must sum to 1");
}

struct TutorConfig {
  TutorMode mode = TutorMode::Naive;
  double lambda_ped = 1.0;
  int episodes = 20000;
  GoalDistribution goal_prior{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  OptimizerConfig optimizer{.backend = Backend::EvolutionStrategies};
  DemoSelection demo_selection = DemoSelection::Greedy;
  PredictionScore prediction_score = PredictionScore::PosteriorMass;
  // Also score the prediction made from the first pick alone, averaged with
  // the full-trajectory one.
  bool prediction_prefix = true;

  void validate() const {
    if (!(lambda_ped >= 0.0) || !std::isfinite(lambda_ped))
      throw std::invalid_argument("tutor.lambda_ped: must be nonnegative");
    if (episodes <= 0) throw std::invalid_argument("tutor.episodes: must be positive");
    validate_goal_distribution(goal_prior, "tutor.goal_prior");
    optimizer.validate();
  }
  friend bool operator==(const TutorConfig&, const TutorConfig&) = default;
};

struct Demonstration {
  Trajectory trajectory;
  Goal intended_goal;  // known to the harness, never read by the learner's prediction step
  friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

struct GoalPrediction {
  GoalDistribution posterior{};
  std::optional<Goal> goal;  // empty when the top two posterior values tie
};

// posterior(g) proportional to likelihood(g) * prior(g). All-zero likelihoods
// leave the prior unchanged. The prediction is left empty when the top two
// posterior values are within 1e-9 of each other.
inline GoalPrediction posterior_from_likelihoods(const GoalDistribution& likelihood,
                                                 const GoalDistribution& goal_prior) {
  GoalPrediction out;
  double z = 0.0;
  for (std::size_t i = 0; i < kNumGoals; ++i) {
    out.posterior[i] = likelihood[i] * goal_prior[i];
    z += out.posterior[i];
  }
  if (z > 0.0) {
    for (double& p : out.posterior) p /= z;
  } else {
    out.posterior = goal_prior;
  }

  const std::size_t top = argmax(out.posterior);
  double runner_up = -1.0;
  for (std::size_t i = 0; i < kNumGoals; ++i)
    if (i != top) runner_up = std::max(runner_up, out.posterior[i]);
  if (out.posterior[top] - runner_up >= 1e-9) out.goal = goal_at(top);
  return out;
}

// Bayesian inversion of the tutor's own policy: which goal would I have been
// pursuing if I had produced this trajectory?
inline GoalPrediction self_predict_goal(const GoalConditionedPolicy& pol, Trajectory traj,
                                        const GoalDistribution& goal_prior) {
  GoalDistribution likelihood{};
  for (auto g : kAllGoals) likelihood[index(g)] = pol[g].trajectory_prob(traj);
  return posterior_from_likelihoods(likelihood, goal_prior);
}

// Same inversion from the first pick only.
inline GoalPrediction self_predict_first_pick(const GoalConditionedPolicy& pol, BallColor first,
                                              const GoalDistribution& goal_prior) {
  GoalDistribution likelihood{};
  for (auto g : kAllGoals) likelihood[index(g)] = pol[g].first_probs()[index(first)];
  return posterior_from_likelihoods(likelihood, goal_prior);
}

// Prediction term in [0, 1] for pursuing `pursued` and producing `traj`.
inline double prediction_score(const GoalConditionedPolicy& pol, Goal pursued, Trajectory traj,
                               const TutorConfig& cfg) {
  auto score = [&](const GoalPrediction& p) {
    if (cfg.prediction_score == PredictionScore::PosteriorMass) return p.posterior[index(pursued)];
    return (p.goal && *p.goal == pursued) ? 1.0 : 0.0;
  };
  const double full = score(self_predict_goal(pol, traj, cfg.goal_prior));
  if (!cfg.prediction_prefix) return full;
  return 0.5 * (full + score(self_predict_first_pick(pol, traj.first, cfg.goal_prior)));
}

inline double tutor_reward(TutorMode mode, Goal pursued, OutcomeSet o, double prediction_score,
                           double lambda_ped) {
  const double achieved = goal_satisfied(pursued, o) ? 1.0 : 0.0;
  if (mode == TutorMode::Naive) return achieved;
  return achieved + lambda_ped * prediction_score;
}

// Argmax form: the prediction term fires only for a unique, correct prediction.
inline double tutor_reward(TutorMode mode, Goal pursued, OutcomeSet o, std::optional<Goal> prediction,
                           double lambda_ped) {
  return tutor_reward(mode, pursued, o, (prediction && *prediction == pursued) ? 1.0 : 0.0, lambda_ped);
}

inline double tutor_reward(const GoalConditionedPolicy& pol, Goal pursued, Trajectory traj, const TutorConfig& cfg) {
  const double pred = cfg.mode == TutorMode::Pedagogical ? prediction_score(pol, pursued, traj, cfg) : 0.0;
  return tutor_reward(cfg.mode, pursued, outcome(traj), pred, cfg.lambda_ped);
}

// Exact expected tutor reward of the g table, with self-prediction evaluated
// against `pol` itself.
inline double tutor_expected_reward(const GoalConditionedPolicy& pol, Goal g, const TutorConfig& cfg) {
  return expected_reward(pol[g], [&](Trajectory t) { return tutor_reward(pol, g, t, cfg); });
}

namespace detail {

inline GoalConditionedPolicy train_tutor_score_function(const TutorConfig& cfg, Rng& rng) {
  GoalConditionedPolicy pol;
  std::array<double, kNumGoals> baseline{};
  const auto& sg = cfg.optimizer.sg;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const Goal g = goal_at(sample_index(cfg.goal_prior, rng));
    const Trajectory traj = sample_trajectory(pol, g, rng);
    const double r = tutor_reward(pol, g, traj, cfg);
    pol[g] = score_function_update(pol[g], traj, r, baseline[index(g)], sg);
    baseline[index(g)] = update_baseline(baseline[index(g)], r, sg.baseline_decay);
  }
  return pol;
}

// The episode budget is spent as population-sized batches: one ES step per
// `population` episodes.
inline GoalConditionedPolicy train_tutor_es(const TutorConfig& cfg, Rng& rng) {
  GoalConditionedPolicy pol;
  const auto& es = cfg.optimizer.es;
  const int steps = (cfg.episodes + es.population - 1) / es.population;
  for (int step = 0; step < steps; ++step) {
    const Goal g = goal_at(sample_index(cfg.goal_prior, rng));
    auto fitness = [&](const GoalConditionedPolicy& cand, Rng& sub) {
      if (es.fitness_mode == FitnessMode::Exact) return tutor_expected_reward(cand, g, cfg);
      double total = 0.0;
      for (int i = 0; i < es.monte_carlo_samples; ++i) total += tutor_reward(cand, g, sample_trajectory(cand, g, sub), cfg);
      return total / es.monte_carlo_samples;
    };
    pol = es_step(pol, g, fitness, es, rng);
  }
  return pol;
}

}  // namespace detail

inline GoalConditionedPolicy train_tutor(const TutorConfig& cfg, Rng& rng) {
  cfg.validate();
  return cfg.optimizer.backend == Backend::ScoreFunction ? detail::train_tutor_score_function(cfg, rng)
                                                         : detail::train_tutor_es(cfg, rng);
}

inline Demonstration demonstrate(const GoalConditionedPolicy& pol, Goal desired, DemoSelection selection, Rng& rng) {
  const Trajectory t =
      selection == DemoSelection::Greedy ? greedy_trajectory(pol, desired) : sample_trajectory(pol, desired, rng);
  return {t, desired};
}

inline Demonstration demonstrate(const GoalConditionedPolicy& pol, Goal desired, const TutorConfig& cfg, Rng& rng) {
  return demonstrate(pol, desired, cfg.demo_selection, rng);
}

}  // namespace tutorsim
