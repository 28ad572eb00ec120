#include <array>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tutorsim/experiment.hpp"

namespace tutorsim {
namespace {

using enum BallColor;

EpisodeRecord probe(Goal desired, Goal predicted, Trajectory played) {
  EpisodeRecord r;
  r.desired = desired;
  r.predicted = predicted;
  r.played = played;
  r.achieved = outcome(played);
  r.desired_reached = goal_satisfied(desired, r.achieved);
  return r;
}

RunConfig small_config(int episodes = 1000) {
  RunConfig cfg;
  cfg.experiment.episodes = episodes;
  cfg.experiment.eval_period = 100;
  cfg.experiment.eval_window = 30;
  return cfg;
}

const GoalConditionedPolicy& tutor(TutorMode mode) {
  static const std::array<GoalConditionedPolicy, 2> tutors{train_tutor_for(TutorMode::Naive, 0, TutorConfig{}),
                                                           train_tutor_for(TutorMode::Pedagogical, 0, TutorConfig{})};
  return tutors[static_cast<std::size_t>(mode)];
}

TEST(Metrics, PredictabilityExamples) {
  const std::vector<EpisodeRecord> all{probe(Goal::Goal1, Goal::Goal1, {}), probe(Goal::Goal2, Goal::Goal2, {})};
  EXPECT_EQ(compute_predictability(all), 1.0);
  const std::vector<EpisodeRecord> none{probe(Goal::Goal1, Goal::Goal2, {}), probe(Goal::NoGoal, Goal::Goal1, {})};
  EXPECT_EQ(compute_predictability(none), 0.0);
  const std::vector<EpisodeRecord> two_of_three{probe(Goal::Goal1, Goal::Goal1, {}), probe(Goal::Goal2, Goal::Goal1, {}),
                                                probe(Goal::NoGoal, Goal::NoGoal, {})};
  EXPECT_DOUBLE_EQ(compute_predictability(two_of_three), 2.0 / 3.0);
  EXPECT_THROW(compute_predictability({}), std::invalid_argument);
}

TEST(Metrics, ReachabilityExamples) {
  std::vector<EpisodeRecord> goal2(7, probe(Goal::Goal2, Goal::Goal2, {Orange, Pink}));
  EXPECT_EQ(compute_reachability(goal2), 1.0);
  const std::vector<EpisodeRecord> nogoal{probe(Goal::NoGoal, Goal::NoGoal, {Orange, Orange})};
  EXPECT_EQ(compute_reachability(nogoal), 0.0);
  const std::vector<EpisodeRecord> mixed{
      probe(Goal::Goal1, Goal::Goal1, {Pink, Orange}), probe(Goal::Goal1, Goal::Goal2, {Orange, Pink}),
      probe(Goal::NoGoal, Goal::NoGoal, {Purple, Pink}), probe(Goal::Goal2, Goal::Goal1, {Orange, Orange})};
  EXPECT_DOUBLE_EQ(compute_reachability(mixed), 0.75);
  EXPECT_THROW(compute_reachability({}), std::invalid_argument);
}

TEST(RunCondition, EvalScheduleIsArithmetic) {
  for (auto c : kAllConditions) {
    auto cfg = small_config(1000);
    cfg.condition = c;
    const auto r = run_condition(cfg, tutor(c.tutor));
    ASSERT_EQ(r.series.points.size(), 11u);
    for (std::size_t i = 0; i < r.series.points.size(); ++i) {
      EXPECT_EQ(r.series.points[i].episode, static_cast<int>(i) * 100);
      EXPECT_GE(r.series.points[i].predictability, 0.0);
      EXPECT_LE(r.series.points[i].predictability, 1.0);
      EXPECT_GE(r.series.points[i].reachability, 0.0);
      EXPECT_LE(r.series.points[i].reachability, 1.0);
    }
    EXPECT_EQ(r.records.size(), 1000u);
    EXPECT_EQ(r.records.front().episode, 1);
    EXPECT_EQ(r.records.back().episode, 1000);
  }
}

TEST(RunCondition, OracleLearnerScoresPerfectly) {
  const auto& ped = tutor(TutorMode::Pedagogical);
  LearnerState oracle = make_learner(LearnerConfig{}, BucketPrior{});
  for (auto g : kAllGoals) {
    const auto demo = greedy_trajectory(ped, g);
    oracle.prediction.logits[demo.index()] = {};
    oracle.prediction.logits[demo.index()][index(g)] = 100.0;
  }
  oracle.policy[Goal::NoGoal] = testing::one_hot_table({Purple, Purple}, 100.0);
  oracle.policy[Goal::Goal1] = testing::one_hot_table({Pink, Orange}, 100.0);
  oracle.policy[Goal::Goal2] = testing::one_hot_table({Orange, Pink}, 100.0);

  auto cfg = small_config(300);
  cfg.condition = {TutorMode::Pedagogical, LearnerMode::Literal};
  const auto r = run_condition(cfg, ped, oracle);
  for (const auto& p : r.series.points) {
    EXPECT_EQ(p.predictability, 1.0) << p.episode;
    EXPECT_EQ(p.reachability, 1.0) << p.episode;
  }
}

TEST(EvaluateLearner, DoesNotMutateLearner) {
  Rng rng(3);
  auto s = make_learner(LearnerConfig{.mode = LearnerMode::Pragmatic}, BucketPrior{});
  for (int ep = 0; ep < 300; ++ep) {
    const Demonstration demo = demonstrate(tutor(TutorMode::Naive), goal_at(rng() % 3), DemoSelection::Sample, rng);
    s = learner_episode(std::move(s), demo, rng).first;
    if (ep % 50 == 0) {
      const auto before = s;
      evaluate_learner(s, tutor(TutorMode::Naive), 60, ep);
      EXPECT_EQ(s, before);
    }
  }
}

TEST(EvaluateLearner, ProbeScheduleIsBalanced) {
  const auto s = make_learner(LearnerConfig{}, BucketPrior{});
  for (int window = 1; window <= 40; ++window) {
    const auto probes = evaluate_learner(s, tutor(TutorMode::Naive), window, 0);
    ASSERT_EQ(probes.size(), static_cast<std::size_t>(window));
    std::array<int, kNumGoals> counts{};
    for (const auto& p : probes) ++counts[index(p.desired)];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    EXPECT_LE(*hi - *lo, 1) << window;
  }
}

TEST(RunCondition, PairedLearnersSeeIdenticalDemonstrations) {
  for (auto mode : {TutorMode::Naive, TutorMode::Pedagogical}) {
    auto cfg = small_config(2000);
    cfg.seed = 4;
    cfg.condition = {mode, LearnerMode::Literal};
    const auto literal = run_condition(cfg, tutor(mode));
    cfg.condition = {mode, LearnerMode::Pragmatic};
    const auto pragmatic = run_condition(cfg, tutor(mode));
    ASSERT_EQ(literal.records.size(), pragmatic.records.size());
    for (std::size_t i = 0; i < literal.records.size(); ++i) {
      EXPECT_EQ(literal.records[i].desired, pragmatic.records[i].desired);
      EXPECT_EQ(literal.records[i].demo, pragmatic.records[i].demo);
    }
  }
}

TEST(RunCondition, RejectsInvalidConfig) {
  auto cfg = small_config();
  cfg.experiment.eval_period = 0;
  EXPECT_THROW(run_condition(cfg, tutor(TutorMode::Naive)), std::invalid_argument);
}

TEST(GridExperiment, CardinalityAndDeterminism) {
  RunConfig base = small_config(400);
  base.tutor.episodes = 4000;
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  const auto a = grid_experiment(base, seeds, 1);
  const auto b = grid_experiment(base, seeds, 3);
  ASSERT_EQ(a.runs.size(), 12u);
  EXPECT_EQ(a.tutors.size(), 6u);
  const auto by = a.series_by_condition();
  EXPECT_EQ(by.size(), 4u);
  for (const auto& [c, list] : by) EXPECT_EQ(list.size(), 3u);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].condition, b.runs[i].condition);
    EXPECT_EQ(a.runs[i].seed, b.runs[i].seed);
    EXPECT_EQ(a.runs[i].result.series, b.runs[i].result.series);
    EXPECT_EQ(a.runs[i].result.records, b.runs[i].result.records);
  }
  EXPECT_THROW(grid_experiment(base, std::span<const std::uint64_t>{}), std::invalid_argument);
}

TEST(SummarizeFinal, MeanAndPopulationStd) {
  std::vector<MetricsSeries> s(2);
  s[0].points = {{0, 0.0, 0.0}, {100, 0.4, 1.0}};
  s[1].points = {{0, 0.0, 0.0}, {100, 0.8, 0.0}};
  const auto sum = summarize_final(s);
  EXPECT_NEAR(sum.mean_predictability, 0.6, 1e-12);
  EXPECT_NEAR(sum.std_predictability, 0.2, 1e-12);
  EXPECT_NEAR(sum.mean_reachability, 0.5, 1e-12);
  EXPECT_NEAR(sum.std_reachability, 0.5, 1e-12);
}

}  // namespace
}  // namespace tutorsim
