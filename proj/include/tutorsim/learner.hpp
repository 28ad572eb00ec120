#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "env.hpp"
#include "optimize.hpp"
#include "policy.hpp"
#include "random.hpp"
#include "tutor.hpp"

namespace tutorsim {

enum class LearnerMode { Literal, Pragmatic };

inline std::string_view to_string(LearnerMode m) { return m == LearnerMode::Literal ? "literal" : "pragmatic"; }
inline LearnerMode parse_learner_mode(std::string_view s) {
  if (s == "literal") return LearnerMode::Literal;
  if (s == "pragmatic") return LearnerMode::Pragmatic;
  throw std::invalid_argument("unknown learner mode '" + std::string(s) + "' (expected literal|pragmatic)");
}

using GoalLogits = std::array<double, kNumGoals>;

// Demonstration -> goal policy. One softmax row per trajectory.
struct PredictionTable {
  std::array<GoalLogits, kNumTrajectories> logits{};
  double temperature = 1.0;

  GoalDistribution probs(Trajectory demo) const { return softmax(logits[demo.index()], temperature); }

  friend bool operator==(const PredictionTable&, const PredictionTable&) = default;
};

// Counts consecutive demonstrations containing fewer purple balls than a
// naive draw from the bucket would, and fires once when the run reaches
// `threshold`.
struct BiasDetector {
  double expected_purple_per_demo = 1.0;
  int consecutive_below = 0;
  int threshold = 5;
  bool triggered = false;
  double boost_delta = 2.0;

  static BiasDetector from_prior(const BucketPrior& prior, int threshold, double boost_delta) {
    if (threshold <= 0) throw std::invalid_argument("learner.bias_threshold: must be positive");
    if (!(boost_delta > 0.0)) throw std::invalid_argument("learner.boost_delta: must be positive");
    return {prior.expected_purple_per_demo(), 0, threshold, false, boost_delta};
  }

  friend bool operator==(const BiasDetector&, const BiasDetector&) = default;
};

struct DetectorUpdate {
  BiasDetector detector;
  bool fired = false;  // true only on the observation that triggered detection
};

inline DetectorUpdate observe_demo(BiasDetector d, Trajectory demo) {
  if (purple_count(demo) < d.expected_purple_per_demo) {
    d.consecutive_below = std::min(d.consecutive_below + 1, d.threshold);
  } else {
    d.consecutive_below = 0;
  }
  bool fired = false;
  if (d.consecutive_below >= d.threshold && !d.triggered) {
    d.triggered = true;
    fired = true;
  }
  return {d, fired};
}

struct LearnerConfig {
  LearnerMode mode = LearnerMode::Literal;
  int bias_threshold = 5;
  double boost_delta = 2.0;
  SgConfig sg{};

  void validate() const {
    if (bias_threshold <= 0) throw std::invalid_argument("learner.bias_threshold: must be positive");
    if (!(boost_delta > 0.0) || !std::isfinite(boost_delta))
      throw std::invalid_argument("learner.boost_delta: must be positive");
    sg.validate();
  }
  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

struct LearnerState {
  LearnerMode mode = LearnerMode::Literal;
  PredictionTable prediction{};
  GoalConditionedPolicy policy{};
  std::optional<BiasDetector> detector;  // engaged iff mode == Pragmatic
  bool boost_applied = false;
  std::array<double, kNumGoals> action_baseline{};
  std::array<double, kNumTrajectories> prediction_baseline{};
  SgConfig sg{};

  friend bool operator==(const LearnerState&, const LearnerState&) = default;
};

// The bucket prior is only consulted for a pragmatic learner.
inline LearnerState make_learner(const LearnerConfig& cfg, const BucketPrior& prior) {
  cfg.validate();
  LearnerState s;
  s.mode = cfg.mode;
  s.sg = cfg.sg;
  if (cfg.mode == LearnerMode::Pragmatic) {
    prior.validate();
    s.detector = BiasDetector::from_prior(prior, cfg.bias_threshold, cfg.boost_delta);
  }
  return s;
}

inline Goal predict_goal(const LearnerState& s, const Demonstration& demo, bool eval_mode, Rng& rng) {
  const auto p = s.prediction.probs(demo.trajectory);
  return goal_at(eval_mode ? argmax(p) : sample_index(p, rng));
}

inline LearnerState update_prediction(LearnerState s, const Demonstration& demo, Goal predicted, bool correct,
                                      double lr) {
  const std::size_t row = demo.trajectory.index();
  const double reward = correct ? 1.0 : 0.0;
  reinforce_row(s.prediction.logits[row], index(predicted), reward - s.prediction_baseline[row], lr,
                s.prediction.temperature);
  s.prediction_baseline[row] = update_baseline(s.prediction_baseline[row], reward, s.sg.baseline_decay);
  return s;
}

// Shifts the NoGoal table towards purple on both picks. Once per run, and only
// after the detector fired.
inline LearnerState apply_pragmatic_boost(LearnerState s) {
  if (!s.detector || !s.detector->triggered)
    throw std::logic_error("apply_pragmatic_boost: sampling bias has not been detected");
  if (s.boost_applied) throw std::logic_error("apply_pragmatic_boost: boost already applied");
  PolicyTable& t = s.policy[Goal::NoGoal];
  const double delta = s.detector->boost_delta;
  t.first_logits[index(BallColor::Purple)] += delta;
  for (auto& row : t.second_logits) row[index(BallColor::Purple)] += delta;
  s.boost_applied = true;
  return s;
}

struct EpisodeRecord {
  int episode = 0;
  Goal desired = Goal::NoGoal;
  Trajectory demo{};
  Goal predicted = Goal::NoGoal;
  Trajectory played{};
  OutcomeSet achieved{};
  double prediction_reward = 0.0;
  double action_reward = 0.0;    // played trajectory satisfies the predicted goal
  bool desired_reached = false;  // played trajectory satisfies the desired goal
  bool bias_detected = false;    // detector fired on this episode's demo

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

inline std::pair<LearnerState, EpisodeRecord> learner_episode(LearnerState s, const Demonstration& demo, Rng& rng) {
  EpisodeRecord rec;
  rec.desired = demo.intended_goal;
  rec.demo = demo.trajectory;

  if (s.mode == LearnerMode::Pragmatic) {
    auto upd = observe_demo(*s.detector, demo.trajectory);
    s.detector = upd.detector;
    if (upd.fired) {
      s = apply_pragmatic_boost(std::move(s));
      rec.bias_detected = true;
    }
  }

  rec.predicted = predict_goal(s, demo, /*eval_mode=*/false, rng);
  rec.played = sample_trajectory(s.policy, rec.predicted, rng);
  rec.achieved = outcome(rec.played);
  rec.desired_reached = goal_satisfied(demo.intended_goal, rec.achieved);

  const bool correct = rec.predicted == demo.intended_goal;
  rec.prediction_reward = correct ? 1.0 : 0.0;
  const double lr = s.sg.learning_rate;
  s = update_prediction(std::move(s), demo, rec.predicted, correct, lr);

  rec.action_reward = goal_satisfied(rec.predicted, rec.achieved) ? 1.0 : 0.0;
  const std::size_t g = index(rec.predicted);
  s.policy.tables[g] = score_function_update(s.policy.tables[g], rec.played, rec.action_reward, s.action_baseline[g], s.sg);
  s.action_baseline[g] = update_baseline(s.action_baseline[g], rec.action_reward, s.sg.baseline_decay);

  return {std::move(s), rec};
}

}  // namespace tutorsim
