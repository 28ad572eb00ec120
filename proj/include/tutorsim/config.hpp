#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "env.hpp"
#include "experiment.hpp"
#include "learner.hpp"
#include "optimize.hpp"
#include "report.hpp"
#include "tutor.hpp"

namespace tutorsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AppConfig {
  BucketPrior bucket_prior{};
  TutorConfig tutor{};  // tutor.optimizer holds the "optimizer" section
  LearnerConfig learner{};
  ExperimentConfig experiment{};
  std::string output_dir = "out";

  void validate() const {
    bucket_prior.validate();
    tutor.validate();
    learner.validate();
    experiment.validate();
    if (output_dir.empty()) throw std::invalid_argument("output_dir: must be nonempty");
  }

  RunConfig run_config(Condition c, std::uint64_t seed) const {
    return {c, seed, experiment, tutor, learner, bucket_prior};
  }

  friend bool operator==(const AppConfig&, const AppConfig&) = default;
};

inline std::string_view to_string(Backend b) { return b == Backend::ScoreFunction ? "score_function" : "es"; }
inline std::string_view to_string(FitnessMode m) { return m == FitnessMode::Exact ? "exact" : "monte_carlo"; }

namespace detail {

// Reads fields from one JSON object, remembering which keys were consumed so
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(name_or_root() + ": expected a JSON object");
  }

  template <class T>
  void get(std::string_view key, T& out) {
    seen_.insert(std::string(key));
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(field(key) + ": wrong type");
    }
  }

  template <class Parse, class T>
  void get_enum(std::string_view key, T& out, Parse parse) {
    std::string s;
    const bool present = j_.contains(key);
    get(key, s);
    if (!present) return;
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  // Returns a reader for a nested object, or nullopt when absent.
  std::optional<ObjectReader> child(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return ObjectReader(*it, field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError("unknown field '" + field(it.key()) + "'");
  }

  std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

 private:
  std::string name_or_root() const { return path_.empty() ? "config" : path_; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

inline void read_goal_distribution(ObjectReader& parent, std::string_view key, GoalDistribution& d) {
  if (auto r = parent.child(key)) {
    for (auto g : kAllGoals) r->get(to_string(g), d[index(g)]);
    r->finish();
  }
}

template <class Fn>
void rethrow_as_config_error(Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace detail

inline AppConfig config_from_json(const nlohmann::json& j) {
  AppConfig cfg;
  detail::ObjectReader root(j, "");

  if (auto r = root.child("bucket_prior")) {
    for (auto c : kAllColors) r->get(to_string(c), cfg.bucket_prior.p[index(c)]);
    r->finish();
  }
  if (auto r = root.child("tutor")) {
    r->get_enum("mode", cfg.tutor.mode, parse_tutor_mode);
    r->get("lambda_ped", cfg.tutor.lambda_ped);
    r->get("episodes", cfg.tutor.episodes);
    detail::read_goal_distribution(*r, "goal_prior", cfg.tutor.goal_prior);
    r->get_enum("demo_selection", cfg.tutor.demo_selection, parse_demo_selection);
    r->get_enum("prediction_score", cfg.tutor.prediction_score, parse_prediction_score);
    r->get("prediction_prefix", cfg.tutor.prediction_prefix);
    r->finish();
  }
  if (auto r = root.child("learner")) {
    r->get_enum("mode", cfg.learner.mode, parse_learner_mode);
    r->get("bias_threshold", cfg.learner.bias_threshold);
    r->get("boost_delta", cfg.learner.boost_delta);
    r->finish();
  }
  if (auto r = root.child("optimizer")) {
    auto& opt = cfg.tutor.optimizer;
    r->get_enum("backend", opt.backend, [](std::string_view s) {
      if (s == "score_function") return Backend::ScoreFunction;
      if (s == "es") return Backend::EvolutionStrategies;
      throw std::invalid_argument("unknown backend '" + std::string(s) + "' (expected score_function|es)");
    });
    r->get("learning_rate", opt.sg.learning_rate);
    r->get("baseline_decay", opt.sg.baseline_decay);
    if (auto es = r->child("es")) {
      es->get("population", opt.es.population);
      es->get("sigma", opt.es.sigma);
      es->get("learning_rate", opt.es.learning_rate);
      es->get_enum("fitness_mode", opt.es.fitness_mode, [](std::string_view s) {
        if (s == "exact") return FitnessMode::Exact;
        if (s == "monte_carlo") return FitnessMode::MonteCarlo;
        throw std::invalid_argument("unknown fitness mode '" + std::string(s) + "' (expected exact|monte_carlo)");
      });
      es->get("monte_carlo_samples", opt.es.monte_carlo_samples);
      es->finish();
    }
    r->finish();
  }
  cfg.learner.sg = cfg.tutor.optimizer.sg;
  if (auto r = root.child("experiment")) {
    r->get("episodes", cfg.experiment.episodes);
    r->get("eval_period", cfg.experiment.eval_period);
    r->get("eval_window", cfg.experiment.eval_window);
    r->get("seeds", cfg.experiment.seeds);
    r->get_enum("train_demo_selection", cfg.experiment.train_demo_selection, parse_demo_selection);
    r->finish();
  }
  root.get("output_dir", cfg.output_dir);
  root.finish();

  detail::rethrow_as_config_error([&] { cfg.validate(); });
  return cfg;
}

inline AppConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline AppConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  return parse_config(read_text_file(path));
}

inline nlohmann::json config_to_json(const AppConfig& cfg) {
  nlohmann::json j;
  for (auto c : kAllColors) j["bucket_prior"][std::string(to_string(c))] = cfg.bucket_prior[c];
  auto& t = j["tutor"];
  t["mode"] = to_string(cfg.tutor.mode);
  t["lambda_ped"] = cfg.tutor.lambda_ped;
  t["episodes"] = cfg.tutor.episodes;
  for (auto g : kAllGoals) t["goal_prior"][std::string(to_string(g))] = cfg.tutor.goal_prior[index(g)];
  t["demo_selection"] = to_string(cfg.tutor.demo_selection);
  t["prediction_score"] = to_string(cfg.tutor.prediction_score);
  t["prediction_prefix"] = cfg.tutor.prediction_prefix;
  auto& l = j["learner"];
  l["mode"] = to_string(cfg.learner.mode);
  l["bias_threshold"] = cfg.learner.bias_threshold;
  l["boost_delta"] = cfg.learner.boost_delta;
  const auto& opt = cfg.tutor.optimizer;
  auto& o = j["optimizer"];
  o["backend"] = to_string(opt.backend);
  o["learning_rate"] = opt.sg.learning_rate;
  o["baseline_decay"] = opt.sg.baseline_decay;
  o["es"]["population"] = opt.es.population;
  o["es"]["sigma"] = opt.es.sigma;
  o["es"]["learning_rate"] = opt.es.learning_rate;
  o["es"]["fitness_mode"] = to_string(opt.es.fitness_mode);
  o["es"]["monte_carlo_samples"] = opt.es.monte_carlo_samples;
  auto& e = j["experiment"];
  e["episodes"] = cfg.experiment.episodes;
  e["eval_period"] = cfg.experiment.eval_period;
  e["eval_window"] = cfg.experiment.eval_window;
  e["seeds"] = cfg.experiment.seeds;
  e["train_demo_selection"] = to_string(cfg.experiment.train_demo_selection);
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace tutorsim
