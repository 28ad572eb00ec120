// tutorsim: train tutors, run the tutor/learner condition grid, render reports.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 convergence warning.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tutorsim/tutorsim.hpp"

namespace fs = std::filesystem;
using namespace tutorsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConvergence = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
};

AppConfig resolve_config(const CommonOptions& common) {
  AppConfig cfg = common.config_path.empty() ? AppConfig{} : load_config(common.config_path);
  if (!common.out_dir.empty()) cfg.output_dir = common.out_dir;
  return cfg;
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

int train_tutor_cmd(const CommonOptions& common, const std::string& mode_name, std::uint64_t seed, int episodes) {
  AppConfig cfg = resolve_config(common);
  cfg.tutor.mode = parse_tutor_mode(mode_name);
  if (episodes > 0) cfg.tutor.episodes = episodes;
  cfg.validate();

  const auto policy = train_tutor_for(cfg.tutor.mode, seed, cfg.tutor);
  const fs::path out = ensure_dir(cfg.output_dir);
  const std::string stem = "tutor_" + mode_name + "_seed" + std::to_string(seed);
  write_policy_csv(policy, out / (stem + ".csv"),
                   {{"mode", mode_name},
                    {"seed", std::to_string(seed)},
                    {"episodes", std::to_string(cfg.tutor.episodes)},
                    {"lambda_ped", fixed6(cfg.tutor.lambda_ped)}});
  render_policy_bars(policy, Goal::Goal1, out / (stem + ".svg"),
                     "Tutor (" + mode_name + ", seed " + std::to_string(seed) + ") policy for goal 1");

  const Trajectory g2 = greedy_trajectory(policy, Goal::Goal2);
  std::cout << "wrote " << (out / (stem + ".csv")).string() << " and " << (out / (stem + ".svg")).string() << "\n";
  for (auto g : kAllGoals)
    std::cout << "  greedy demo for " << to_string(g) << ": " << to_string(greedy_trajectory(policy, g)) << "\n";
  if (!(g2 == Trajectory{BallColor::Orange, BallColor::Pink})) {
    std::cerr << "warning: tutor did not converge: greedy goal-2 demonstration is " << to_string(g2)
              << ", expected (orange, pink)\n";
    return kExitConvergence;
  }
  return kExitOk;
}

void print_summary(const GridResult& grid) {
  std::printf("%-24s %-22s %-22s\n", "condition", "final predictability", "final reachability");
  for (const auto& [cond, series] : grid.series_by_condition()) {
    const auto s = summarize_final(series);
    std::printf("%-24s %s +- %s   %s +- %s\n", to_string(cond).c_str(), fixed6(s.mean_predictability).c_str(),
                fixed6(s.std_predictability).c_str(), fixed6(s.mean_reachability).c_str(),
                fixed6(s.std_reachability).c_str());
  }
}

int run_grid_cmd(const CommonOptions& common, int seeds, int episodes, int parallel) {
  AppConfig cfg = resolve_config(common);
  if (seeds > 0) cfg.experiment.seeds = seeds;
  if (episodes > 0) cfg.experiment.episodes = episodes;
  cfg.validate();

  std::vector<std::uint64_t> seed_list;
  for (int s = 0; s < cfg.experiment.seeds; ++s) seed_list.push_back(static_cast<std::uint64_t>(s));
  const GridResult grid = grid_experiment(cfg.run_config({}, 0), seed_list, parallel);

  const fs::path out = ensure_dir(cfg.output_dir);
  for (const auto& run : grid.runs) write_run_csv(run.result.records, out / run_csv_name(run.condition, run.seed));
  const auto labeled = labeled_series(grid);
  write_metrics_csv(labeled, out / "metrics.csv");
  const auto grouped = group_by_condition(labeled);
  render_learning_curves(grouped, Metric::Predictability, out / "predictability.svg");
  render_learning_curves(grouped, Metric::Reachability, out / "reachability.svg");

  print_summary(grid);
  return kExitOk;
}

int report_cmd(const CommonOptions& common, const std::string& metrics_path, const std::string& policy_path,
               const std::string& goal_name) {
  if (metrics_path.empty() && policy_path.empty())
    throw ConfigError("report: give --metrics and/or --policy");
  AppConfig cfg = resolve_config(common);
  const fs::path out = ensure_dir(cfg.output_dir);
  if (!metrics_path.empty()) {
    const auto grouped = group_by_condition(read_metrics_csv(metrics_path));
    render_learning_curves(grouped, Metric::Predictability, out / "predictability.svg");
    render_learning_curves(grouped, Metric::Reachability, out / "reachability.svg");
    std::cout << "wrote learning curves to " << out.string() << "\n";
  }
  if (!policy_path.empty()) {
    const Goal g = parse_goal(goal_name);
    const auto policy = parse_policy_csv(read_text_file(policy_path));
    const fs::path svg_path = out / (fs::path(policy_path).stem().string() + "_" + goal_name + ".svg");
    render_policy_bars(policy, g, svg_path);
    std::cout << "wrote " << svg_path.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tutor/learner demonstration simulator"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON configuration file");
    sub->add_option("--out", common.out_dir, "Output directory (overrides output_dir)");
  };

  std::string mode;
  std::uint64_t seed = 0;
  int tutor_episodes = 0;
  auto* train = app.add_subcommand("train-tutor", "Train one tutor and write its policy CSV and SVG");
  add_common(train);
  train->add_option("--mode", mode, "naive|pedagogical")->required()->check(CLI::IsMember({"naive", "pedagogical"}));
  train->add_option("--seed", seed, "Random seed");
  train->add_option("--episodes", tutor_episodes, "Tutor training episodes")->check(CLI::PositiveNumber);

  int seeds = 0, grid_episodes = 0, parallel = 1;
  auto* grid = app.add_subcommand("run-grid", "Run all four tutor/learner conditions over seeds 0..N-1");
  add_common(grid);
  grid->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  grid->add_option("--episodes", grid_episodes, "Learner episodes per run")->check(CLI::PositiveNumber);
  grid->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);

  std::string metrics_path, policy_path, goal_name = "g1";
  auto* report = app.add_subcommand("report", "Re-render SVG charts from CSV outputs");
  add_common(report);
  report->add_option("--metrics", metrics_path, "Aggregated metrics CSV");
  report->add_option("--policy", policy_path, "Policy CSV");
  report->add_option("--goal", goal_name, "Goal to plot from the policy CSV")->check(CLI::IsMember({"none", "g1", "g2"}));

  auto* dump = app.add_subcommand("dump-config", "Print the effective configuration as JSON");
  dump->add_option("--config", common.config_path, "JSON configuration file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*train) return train_tutor_cmd(common, mode, seed, tutor_episodes);
    if (*grid) return run_grid_cmd(common, seeds, grid_episodes, parallel);
    if (*report) return report_cmd(common, metrics_path, policy_path, goal_name);
    if (*dump) {
      std::cout << config_to_json(resolve_config(common)).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
