#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "env.hpp"
#include "learner.hpp"
#include "policy.hpp"
#include "random.hpp"
#include "tutor.hpp"

namespace tutorsim {

struct Condition {
  TutorMode tutor = TutorMode::Naive;
  LearnerMode learner = LearnerMode::Literal;

  friend auto operator<=>(const Condition&, const Condition&) = default;
};

inline constexpr std::array<Condition, 4> kAllConditions{{
    {TutorMode::Naive, LearnerMode::Literal},
    {TutorMode::Naive, LearnerMode::Pragmatic},
    {TutorMode::Pedagogical, LearnerMode::Literal},
    {TutorMode::Pedagogical, LearnerMode::Pragmatic},
}};

inline std::string to_string(Condition c) {
  return std::string(to_string(c.tutor)) + "_" + std::string(to_string(c.learner));
}

struct ExperimentConfig {
  int episodes = 30000;
  int eval_period = 500;
  int eval_window = 60;
  int seeds = 10;
  DemoSelection train_demo_selection = DemoSelection::Sample;

  void validate() const {
    if (episodes <= 0) throw std::invalid_argument("experiment.episodes: must be positive");
    if (eval_period <= 0) throw std::invalid_argument("experiment.eval_period: must be positive");
    if (eval_window <= 0) throw std::invalid_argument("experiment.eval_window: must be positive");
    if (seeds <= 0) throw std::invalid_argument("experiment.seeds: must be positive");
  }
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct RunConfig {
  Condition condition{};
  std::uint64_t seed = 0;
  ExperimentConfig experiment{};
  TutorConfig tutor{};
  LearnerConfig learner{};
  BucketPrior bucket_prior{};

  void validate() const {
    experiment.validate();
    tutor.validate();
    learner.validate();
    bucket_prior.validate();
  }
};

struct MetricsPoint {
  int episode = 0;
  double predictability = 0.0;
  double reachability = 0.0;
  friend bool operator==(const MetricsPoint&, const MetricsPoint&) = default;
};

struct MetricsSeries {
  std::vector<MetricsPoint> points;
  friend bool operator==(const MetricsSeries&, const MetricsSeries&) = default;
};

struct RunResult {
  MetricsSeries series;
  std::vector<EpisodeRecord> records;  // training episodes only
  LearnerState learner;
};

inline double compute_predictability(std::span<const EpisodeRecord> window) {
  if (window.empty()) throw std::invalid_argument("compute_predictability: empty evaluation window");
  const auto hits = std::ranges::count_if(window, [](const EpisodeRecord& r) { return r.predicted == r.desired; });
  return static_cast<double>(hits) / static_cast<double>(window.size());
}

inline double compute_reachability(std::span<const EpisodeRecord> window) {
  if (window.empty()) throw std::invalid_argument("compute_reachability: empty evaluation window");
  const auto hits = std::ranges::count_if(window, [](const EpisodeRecord& r) { return r.desired_reached; });
  return static_cast<double>(hits) / static_cast<double>(window.size());
}

// Frozen probe pass: greedy demos, greedy prediction, greedy action, desired
// goals round-robin. Takes the learner by const reference; nothing is learned.
inline std::vector<EpisodeRecord> evaluate_learner(const LearnerState& learner, const GoalConditionedPolicy& tutor,
                                                   int window, int episode_index) {
  std::vector<EpisodeRecord> probes;
  probes.reserve(static_cast<std::size_t>(window));
  Rng unused(0);
  for (int i = 0; i < window; ++i) {
    const Goal desired = kAllGoals[static_cast<std::size_t>(i) % kNumGoals];
    const Demonstration demo = demonstrate(tutor, desired, DemoSelection::Greedy, unused);
    EpisodeRecord r;
    r.episode = episode_index;
    r.desired = desired;
    r.demo = demo.trajectory;
    r.predicted = predict_goal(learner, demo, /*eval_mode=*/true, unused);
    r.played = greedy_trajectory(learner.policy, r.predicted);
    r.achieved = outcome(r.played);
    r.desired_reached = goal_satisfied(desired, r.achieved);
    r.action_reward = goal_satisfied(r.predicted, r.achieved) ? 1.0 : 0.0;
    r.prediction_reward = r.predicted == desired ? 1.0 : 0.0;
    probes.push_back(r);
  }
  return probes;
}

namespace streams {
inline constexpr std::uint64_t kTutor = 0x7475746f72ULL;
inline constexpr std::uint64_t kDemos = 0x64656d6f73ULL;
inline constexpr std::uint64_t kLearner = 0x6c6561726eULL;
}  // namespace streams

inline GoalConditionedPolicy train_tutor_for(TutorMode mode, std::uint64_t seed, TutorConfig cfg) {
  cfg.mode = mode;
  Rng rng(derive_seed({streams::kTutor, seed, static_cast<std::uint64_t>(mode)}));
  return train_tutor(cfg, rng);
}

// Runs the learner against an already-trained tutor. Demo and learner random
// streams depend only on (seed, tutor mode), so literal and pragmatic learners
// paired on a seed see the same demonstration stream.
inline RunResult run_condition(const RunConfig& cfg, const GoalConditionedPolicy& tutor,
                               std::optional<LearnerState> initial = std::nullopt) {
  cfg.validate();
  const auto tutor_tag = static_cast<std::uint64_t>(cfg.condition.tutor);
  Rng demo_rng(derive_seed({streams::kDemos, cfg.seed, tutor_tag}));
  Rng learner_rng(derive_seed({streams::kLearner, cfg.seed, tutor_tag}));

  LearnerConfig lcfg = cfg.learner;
  lcfg.mode = cfg.condition.learner;
  LearnerState state = initial ? std::move(*initial) : make_learner(lcfg, cfg.bucket_prior);

  RunResult out;
  out.records.reserve(static_cast<std::size_t>(cfg.experiment.episodes));
  auto eval_point = [&](int episode) {
    const auto probes = evaluate_learner(state, tutor, cfg.experiment.eval_window, episode);
    out.series.points.push_back({episode, compute_predictability(probes), compute_reachability(probes)});
  };

  eval_point(0);
  for (int ep = 1; ep <= cfg.experiment.episodes; ++ep) {
    const Goal desired = goal_at(sample_index(cfg.tutor.goal_prior, demo_rng));
    const Demonstration demo = demonstrate(tutor, desired, cfg.experiment.train_demo_selection, demo_rng);
    auto [next, rec] = learner_episode(std::move(state), demo, learner_rng);
    state = std::move(next);
    rec.episode = ep;
    out.records.push_back(rec);
    if (ep % cfg.experiment.eval_period == 0) eval_point(ep);
  }
  out.learner = std::move(state);
  return out;
}

inline RunResult run_condition(const RunConfig& cfg) {
  return run_condition(cfg, train_tutor_for(cfg.condition.tutor, cfg.seed, cfg.tutor));
}

struct GridRun {
  Condition condition;
  std::uint64_t seed = 0;
  RunResult result;
};

struct GridResult {
  std::vector<GridRun> runs;  // sorted by (condition, seed)
  std::map<std::pair<TutorMode, std::uint64_t>, GoalConditionedPolicy> tutors;

  std::map<Condition, std::vector<MetricsSeries>> series_by_condition() const {
    std::map<Condition, std::vector<MetricsSeries>> out;
    for (const auto& r : runs) out[r.condition].push_back(r.result.series);
    return out;
  }
};

namespace detail {
// Runs task(i) for i in [0, n) on up to `workers` threads. Results are written
// by index, so output order does not depend on scheduling.
template <class Task>
void parallel_for(std::size_t n, int workers, Task&& task) {
  const std::size_t nthreads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, n);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}
}  // namespace detail

// All four conditions for every seed. One tutor per (tutor mode, seed), shared
// by both learner modes.
inline GridResult grid_experiment(const RunConfig& base, std::span<const std::uint64_t> seeds, int parallel = 1) {
  if (seeds.empty()) throw std::invalid_argument("grid_experiment: seed list is empty");
  base.validate();

  std::vector<std::pair<TutorMode, std::uint64_t>> tutor_keys;
  for (auto mode : {TutorMode::Naive, TutorMode::Pedagogical})
    for (auto s : seeds) tutor_keys.emplace_back(mode, s);
  std::vector<GoalConditionedPolicy> tutors(tutor_keys.size());
  detail::parallel_for(tutor_keys.size(), parallel, [&](std::size_t i) {
    tutors[i] = train_tutor_for(tutor_keys[i].first, tutor_keys[i].second, base.tutor);
  });

  GridResult out;
  for (std::size_t i = 0; i < tutor_keys.size(); ++i) out.tutors.emplace(tutor_keys[i], tutors[i]);

  for (auto c : kAllConditions)
    for (auto s : seeds) out.runs.push_back({c, s, {}});
  std::ranges::sort(out.runs, [](const GridRun& a, const GridRun& b) {
    return std::tie(a.condition, a.seed) < std::tie(b.condition, b.seed);
  });

  detail::parallel_for(out.runs.size(), parallel, [&](std::size_t i) {
    RunConfig cfg = base;
    cfg.condition = out.runs[i].condition;
    cfg.seed = out.runs[i].seed;
    out.runs[i].result = run_condition(cfg, out.tutors.at({cfg.condition.tutor, cfg.seed}));
  });
  return out;
}

struct ConditionSummary {
  double mean_predictability = 0.0;
  double std_predictability = 0.0;
  double mean_reachability = 0.0;
  double std_reachability = 0.0;
};

// Mean and population standard deviation of the final point across seeds.
inline ConditionSummary summarize_final(const std::vector<MetricsSeries>& series) {
  ConditionSummary s;
  if (series.empty()) return s;
  const double n = static_cast<double>(series.size());
  for (const auto& m : series) {
    s.mean_predictability += m.points.back().predictability / n;
    s.mean_reachability += m.points.back().reachability / n;
  }
  for (const auto& m : series) {
    s.std_predictability += std::pow(m.points.back().predictability - s.mean_predictability, 2) / n;
    s.std_reachability += std::pow(m.points.back().reachability - s.mean_reachability, 2) / n;
  }
  s.std_predictability = std::sqrt(s.std_predictability);
  s.std_reachability = std::sqrt(s.std_reachability);
  return s;
}

}  // namespace tutorsim
