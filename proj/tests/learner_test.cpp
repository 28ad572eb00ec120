#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tutorsim/learner.hpp"

namespace tutorsim {
namespace {

using enum BallColor;

LearnerConfig pragmatic_config() {
  LearnerConfig cfg;
  cfg.mode = LearnerMode::Pragmatic;
  return cfg;
}

BiasDetector default_detector() { return BiasDetector::from_prior(BucketPrior{}, 5, 2.0); }

TEST(PredictGoal, Examples) {
  Rng rng(1);
  const auto s = make_learner(LearnerConfig{}, BucketPrior{});
  for (auto t : enumerate_trajectories()) EXPECT_EQ(predict_goal(s, {t, Goal::Goal1}, true, rng), Goal::NoGoal);

  auto s2 = s;
  s2.prediction.logits[Trajectory{Pink, Orange}.index()] = {0.0, 5.0, 0.0};
  EXPECT_EQ(predict_goal(s2, {{Pink, Orange}, Goal::Goal1}, true, rng), Goal::Goal1);

  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(predict_goal(s, {{Orange, Pink}, Goal::Goal2}, false, a),
              predict_goal(s, {{Orange, Pink}, Goal::Goal2}, false, b));
}

TEST(UpdatePrediction, CorrectPredictionRaisesItsLogit) {
  const auto s = make_learner(LearnerConfig{}, BucketPrior{});
  const Demonstration demo{{Orange, Pink}, Goal::Goal2};
  const auto next = update_prediction(s, demo, Goal::Goal2, true, 0.1);
  const auto& row = next.prediction.logits[demo.trajectory.index()];
  EXPECT_GT(row[2], 0.0);
  EXPECT_LT(row[0], 0.0);
  EXPECT_LT(row[1], 0.0);
  // lr * (1 - 1/3) for the chosen goal, -lr/3 for the others.
  EXPECT_NEAR(row[2], 0.1 * 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(row[0], -0.1 / 3.0, 1e-15);
  for (std::size_t i = 0; i < kNumTrajectories; ++i)
    if (i != demo.trajectory.index()) { EXPECT_EQ(next.prediction.logits[i], s.prediction.logits[i]); }
}

TEST(UpdatePrediction, RewardEqualToBaselineLeavesRowUnchanged) {
  auto s = make_learner(LearnerConfig{}, BucketPrior{});
  const Demonstration demo{{Pink, Orange}, Goal::Goal1};
  s.prediction.logits[demo.trajectory.index()] = {0.3, -0.2, 1.1};
  s.prediction_baseline[demo.trajectory.index()] = 1.0;
  const auto next = update_prediction(s, demo, Goal::Goal1, true, 0.1);
  EXPECT_EQ(next.prediction.logits, s.prediction.logits);
}

TEST(ObserveDemo, FiresAfterExactlyFiveBiasedDemos) {
  auto d = default_detector();
  EXPECT_DOUBLE_EQ(d.expected_purple_per_demo, 1.0);
  for (int i = 1; i <= 5; ++i) {
    const auto u = observe_demo(d, {Pink, Orange});
    d = u.detector;
    EXPECT_EQ(u.fired, i == 5);
    EXPECT_EQ(d.triggered, i == 5);
    EXPECT_EQ(d.consecutive_below, i);
  }
  const auto again = observe_demo(d, {Orange, Orange});
  EXPECT_FALSE(again.fired);
  EXPECT_TRUE(again.detector.triggered);
}

TEST(ObserveDemo, ResetsOnUnbiasedDemo) {
  auto d = default_detector();
  for (int i = 0; i < 4; ++i) d = observe_demo(d, {Orange, Pink}).detector;
  EXPECT_EQ(d.consecutive_below, 4);
  const auto u = observe_demo(d, {Purple, Orange});
  EXPECT_EQ(u.detector.consecutive_below, 0);
  EXPECT_FALSE(u.detector.triggered);
  EXPECT_FALSE(u.fired);

  d.consecutive_below = 3;
  EXPECT_EQ(observe_demo(d, {Purple, Purple}).detector.consecutive_below, 0);
}

TEST(ObserveDemo, MonotoneOverRandomStreams) {
  Rng rng(4);
  for (int run = 0; run < 500; ++run) {
    auto d = BiasDetector::from_prior(BucketPrior{}, 1 + static_cast<int>(rng() % 6), 2.0);
    int fires = 0;
    bool was_triggered = false;
    for (int i = 0; i < 40; ++i) {
      const auto u = observe_demo(d, Trajectory::from_index(rng() % kNumTrajectories));
      d = u.detector;
      fires += u.fired;
      EXPECT_LE(d.consecutive_below, d.threshold);
      EXPECT_GE(d.consecutive_below, 0);
      if (was_triggered) { EXPECT_TRUE(d.triggered); }
      was_triggered = d.triggered;
    }
    EXPECT_LE(fires, 1);
  }
}

TEST(ObserveDemo, ThresholdFollowsPrior) {
  // With p[Purple] = 0.8 a single purple ball is already below the expected 1.6.
  BucketPrior prior;
  prior.p = {0.8, 0.1, 0.1};
  auto d = BiasDetector::from_prior(prior, 2, 1.0);
  d = observe_demo(d, {Purple, Orange}).detector;
  EXPECT_EQ(d.consecutive_below, 1);
  EXPECT_TRUE(observe_demo(d, {Orange, Purple}).fired);
}

TEST(PragmaticBoost, Examples) {
  auto s = make_learner(pragmatic_config(), BucketPrior{});
  EXPECT_THROW(apply_pragmatic_boost(s), std::logic_error);

  s.detector->triggered = true;
  const auto boosted = apply_pragmatic_boost(s);
  const double expected = std::exp(2.0) / (std::exp(2.0) + 2.0);
  EXPECT_NEAR(boosted.policy[Goal::NoGoal].first_probs()[0], expected, 1e-12);
  EXPECT_NEAR(expected, 0.787, 5e-4);
  EXPECT_EQ(boosted.policy[Goal::Goal1], s.policy[Goal::Goal1]);
  EXPECT_EQ(boosted.policy[Goal::Goal2], s.policy[Goal::Goal2]);
  EXPECT_EQ(boosted.prediction, s.prediction);
  EXPECT_THROW(apply_pragmatic_boost(boosted), std::logic_error);

  const auto literal = make_learner(LearnerConfig{}, BucketPrior{});
  EXPECT_THROW(apply_pragmatic_boost(literal), std::logic_error);
}

TEST(PragmaticBoost, StrictlyIncreasesPurpleProbabilities) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = make_learner(pragmatic_config(), BucketPrior{});
    s.policy = testing::random_policy(rng, 3.0);
    s.detector->triggered = true;
    const auto b = apply_pragmatic_boost(s);
    const auto& before = s.policy[Goal::NoGoal];
    const auto& after = b.policy[Goal::NoGoal];
    EXPECT_GT(after.first_probs()[0], before.first_probs()[0]);
    for (auto c : kAllColors) EXPECT_GT(after.second_probs(c)[0], before.second_probs(c)[0]);
  }
}

TEST(MakeLearner, LiteralHasNoDetectorAndIgnoresPrior) {
  BucketPrior invalid;
  invalid.p = {0.1, 0.1, 0.1};
  const auto s = make_learner(LearnerConfig{}, invalid);
  EXPECT_FALSE(s.detector.has_value());
  EXPECT_THROW(make_learner(pragmatic_config(), invalid), std::invalid_argument);
  EXPECT_TRUE(make_learner(pragmatic_config(), BucketPrior{}).detector.has_value());
}

TEST(MakeLearner, RejectsInvalidConfig) {
  auto cfg = pragmatic_config();
  cfg.bias_threshold = 0;
  EXPECT_THROW(make_learner(cfg, BucketPrior{}), std::invalid_argument);
  cfg = pragmatic_config();
  cfg.boost_delta = -1.0;
  EXPECT_THROW(make_learner(cfg, BucketPrior{}), std::invalid_argument);
}

// Learner whose prediction and action tables are near one-hot, so sampled
// choices are fixed for practical purposes.
LearnerState scripted_learner(Trajectory demo, Goal predicted, Trajectory play) {
  auto s = make_learner(LearnerConfig{}, BucketPrior{});
  s.prediction.logits[demo.index()] = {};
  s.prediction.logits[demo.index()][index(predicted)] = 60.0;
  s.policy[predicted] = testing::one_hot_table(play, 60.0);
  return s;
}

TEST(LearnerEpisode, BothRewardsOnCorrectPlay) {
  Rng rng(6);
  const Trajectory op{Orange, Pink};
  auto [s, rec] = learner_episode(scripted_learner(op, Goal::Goal2, op), {op, Goal::Goal2}, rng);
  EXPECT_EQ(rec.predicted, Goal::Goal2);
  EXPECT_EQ(rec.played, op);
  EXPECT_EQ(rec.achieved, outcome(op));
  EXPECT_EQ(rec.prediction_reward, 1.0);
  EXPECT_EQ(rec.action_reward, 1.0);
  EXPECT_TRUE(rec.desired_reached);
}

TEST(LearnerEpisode, WrongPredictionStillEarnsActionReward) {
  Rng rng(7);
  const Trajectory op{Orange, Pink};
  auto [s, rec] = learner_episode(scripted_learner(op, Goal::Goal1, {Orange, Orange}), {op, Goal::Goal2}, rng);
  EXPECT_EQ(rec.predicted, Goal::Goal1);
  EXPECT_EQ(rec.prediction_reward, 0.0);
  EXPECT_EQ(rec.action_reward, 1.0);
  EXPECT_FALSE(rec.desired_reached);
}

TEST(LearnerEpisode, NoGoalRewardedForEmptyOutcome) {
  Rng rng(8);
  const Trajectory pp{Purple, Purple};
  auto [s, rec] = learner_episode(scripted_learner(pp, Goal::NoGoal, pp), {pp, Goal::NoGoal}, rng);
  EXPECT_EQ(rec.action_reward, 1.0);
  EXPECT_TRUE(rec.achieved.empty());
}

TEST(LearnerEpisode, FeedbackSignalsUpdateDisjointParameters) {
  Rng rng(9);
  for (auto mode : {LearnerMode::Literal, LearnerMode::Pragmatic}) {
    LearnerConfig cfg;
    cfg.mode = mode;
    auto s = make_learner(cfg, BucketPrior{});
    for (int ep = 0; ep < 2000; ++ep) {
      const Demonstration demo{Trajectory::from_index(rng() % kNumTrajectories), goal_at(rng() % kNumGoals)};
      auto [next, rec] = learner_episode(s, demo, rng);
      for (std::size_t i = 0; i < kNumTrajectories; ++i)
        if (i != demo.trajectory.index()) { EXPECT_EQ(next.prediction.logits[i], s.prediction.logits[i]); }
      for (auto g : kAllGoals) {
        if (g == rec.predicted) continue;
        if (rec.bias_detected && g == Goal::NoGoal) continue;
        EXPECT_EQ(next.policy[g], s.policy[g]);
        EXPECT_EQ(next.action_baseline[index(g)], s.action_baseline[index(g)]);
      }
      s = std::move(next);
    }
  }
}

TEST(LearnerEpisode, PragmaticBoostFiresOnBiasedStream) {
  Rng rng(10);
  auto s = make_learner(pragmatic_config(), BucketPrior{});
  std::vector<int> fired_at;
  for (int ep = 0; ep < 8; ++ep) {
    auto [next, rec] = learner_episode(s, {{Pink, Orange}, Goal::Goal1}, rng);
    if (rec.bias_detected) fired_at.push_back(ep);
    s = std::move(next);
  }
  EXPECT_EQ(fired_at, std::vector<int>{4});
  EXPECT_TRUE(s.boost_applied);
}

TEST(LearnerEpisode, Deterministic) {
  for (auto mode : {LearnerMode::Literal, LearnerMode::Pragmatic}) {
    LearnerConfig cfg;
    cfg.mode = mode;
    auto a = make_learner(cfg, BucketPrior{});
    auto b = a;
    Rng ra(11), rb(11), demos(12);
    for (int ep = 0; ep < 500; ++ep) {
      const Demonstration demo{Trajectory::from_index(demos() % kNumTrajectories), goal_at(demos() % kNumGoals)};
      auto [na, reca] = learner_episode(a, demo, ra);
      auto [nb, recb] = learner_episode(b, demo, rb);
      EXPECT_EQ(reca, recb);
      a = std::move(na);
      b = std::move(nb);
    }
    EXPECT_EQ(a, b);
  }
}

}  // namespace
}  // namespace tutorsim
