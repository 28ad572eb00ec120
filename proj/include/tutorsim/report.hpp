#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "env.hpp"
#include "experiment.hpp"
#include "learner.hpp"
#include "policy.hpp"

namespace tutorsim {

// Fixed six-decimal formatting used for every number we emit.
inline std::string fixed6(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != header.size())
      throw std::invalid_argument("CsvTable: row has " + std::to_string(row.size()) + " fields, header has " +
                                  std::to_string(header.size()));
    rows.push_back(std::move(row));
  }

  std::string to_string() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  // Unquoted comma-separated text; lines starting with '#' are skipped.
  static CsvTable parse(std::string_view text) {
    CsvTable t;
    bool have_header = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty() || line.front() == '#') continue;
      std::vector<std::string> fields;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line.find(',', start);
        fields.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (!have_header) {
        t.header = std::move(fields);
        have_header = true;
      } else {
        t.add_row(std::move(fields));
      }
    }
    return t;
  }
};

// ---------------------------------------------------------------- metrics CSV

struct LabeledSeries {
  Condition condition;
  std::uint64_t seed = 0;
  MetricsSeries series;
  friend bool operator==(const LabeledSeries&, const LabeledSeries&) = default;
};

inline std::vector<LabeledSeries> labeled_series(const GridResult& grid) {
  std::vector<LabeledSeries> out;
  for (const auto& r : grid.runs) out.push_back({r.condition, r.seed, r.result.series});
  return out;
}

inline const std::vector<std::string> kMetricsHeader{"episode", "tutor", "learner", "seed", "predictability",
                                                     "reachability"};

inline std::string metrics_csv(std::span<const LabeledSeries> set) {
  std::vector<const LabeledSeries*> sorted;
  for (const auto& s : set) sorted.push_back(&s);
  std::ranges::stable_sort(sorted, [](const LabeledSeries* a, const LabeledSeries* b) {
    return std::tie(a->condition, a->seed) < std::tie(b->condition, b->seed);
  });
  CsvTable t{kMetricsHeader, {}};
  for (const auto* s : sorted) {
    auto points = s->series.points;
    std::ranges::stable_sort(points, {}, &MetricsPoint::episode);
    for (const auto& p : points)
      t.add_row({std::to_string(p.episode), std::string(to_string(s->condition.tutor)),
                 std::string(to_string(s->condition.learner)), std::to_string(s->seed), fixed6(p.predictability),
                 fixed6(p.reachability)});
  }
  return t.to_string();
}

inline void write_metrics_csv(std::span<const LabeledSeries> set, const std::filesystem::path& path) {
  write_text_file(path, metrics_csv(set));
}

inline std::vector<LabeledSeries> parse_metrics_csv(std::string_view text) {
  const CsvTable t = CsvTable::parse(text);
  if (t.header != kMetricsHeader) throw std::runtime_error("metrics CSV: unexpected header");
  std::vector<LabeledSeries> out;
  for (const auto& row : t.rows) {
    const Condition c{parse_tutor_mode(row[1]), parse_learner_mode(row[2])};
    const std::uint64_t seed = std::stoull(row[3]);
    if (out.empty() || out.back().condition != c || out.back().seed != seed) out.push_back({c, seed, {}});
    out.back().series.points.push_back({std::stoi(row[0]), std::stod(row[4]), std::stod(row[5])});
  }
  return out;
}

inline std::vector<LabeledSeries> read_metrics_csv(const std::filesystem::path& path) {
  return parse_metrics_csv(read_text_file(path));
}

inline std::map<Condition, std::vector<MetricsSeries>> group_by_condition(std::span<const LabeledSeries> set) {
  std::map<Condition, std::vector<MetricsSeries>> out;
  for (const auto& s : set) out[s.condition].push_back(s.series);
  return out;
}

// ---------------------------------------------------------------- run CSV

inline std::string run_csv(std::span<const EpisodeRecord> records) {
  CsvTable t{{"episode", "desired", "demo_first", "demo_second", "predicted", "played_first", "played_second",
              "achieved", "prediction_reward", "action_reward", "desired_reached", "bias_detected"},
             {}};
  for (const auto& r : records)
    t.add_row({std::to_string(r.episode), std::string(to_string(r.desired)), std::string(to_string(r.demo.first)),
               std::string(to_string(r.demo.second)), std::string(to_string(r.predicted)),
               std::string(to_string(r.played.first)), std::string(to_string(r.played.second)), to_string(r.achieved),
               fixed6(r.prediction_reward), fixed6(r.action_reward), r.desired_reached ? "1" : "0",
               r.bias_detected ? "1" : "0"});
  return t.to_string();
}

inline void write_run_csv(std::span<const EpisodeRecord> records, const std::filesystem::path& path) {
  write_text_file(path, run_csv(records));
}

inline std::string run_csv_name(Condition c, std::uint64_t seed) {
  return std::string(to_string(c.tutor)) + "_" + std::string(to_string(c.learner)) + "_seed" + std::to_string(seed) +
         ".csv";
}

// ---------------------------------------------------------------- policy CSV

using CsvMetadata = std::vector<std::pair<std::string, std::string>>;

inline std::string policy_csv(const GoalConditionedPolicy& pol, const CsvMetadata& metadata = {}) {
  std::string out;
  for (const auto& [k, v] : metadata) out += "# " + k + "=" + v + "\n";
  CsvTable t{{"goal", "slot", "given_first", "color", "probability"}, {}};
  for (auto g : kAllGoals) {
    const auto first = pol[g].first_probs();
    for (auto c : kAllColors)
      t.add_row({std::string(to_string(g)), "first", "", std::string(to_string(c)), fixed6(first[index(c)])});
    for (auto given : kAllColors) {
      const auto second = pol[g].second_probs(given);
      for (auto c : kAllColors)
        t.add_row({std::string(to_string(g)), "second", std::string(to_string(given)), std::string(to_string(c)),
                   fixed6(second[index(c)])});
    }
  }
  return out + t.to_string();
}

inline void write_policy_csv(const GoalConditionedPolicy& pol, const std::filesystem::path& path,
                             const CsvMetadata& metadata = {}) {
  write_text_file(path, policy_csv(pol, metadata));
}

// Rebuilds a policy whose softmax reproduces the stored probabilities
// (logit = log p; zero probabilities are floored at 1e-12).
inline GoalConditionedPolicy parse_policy_csv(std::string_view text) {
  const CsvTable t = CsvTable::parse(text);
  if (t.header != std::vector<std::string>{"goal", "slot", "given_first", "color", "probability"})
    throw std::runtime_error("policy CSV: unexpected header");
  GoalConditionedPolicy pol;
  for (const auto& row : t.rows) {
    PolicyTable& table = pol[parse_goal(row[0])];
    const double logit = std::log(std::max(std::stod(row[4]), 1e-12));
    const std::size_t c = index(parse_color(row[3]));
    if (row[1] == "first")
      table.first_logits[c] = logit;
    else if (row[1] == "second")
      table.second_logits[index(parse_color(row[2]))][c] = logit;
    else
      throw std::runtime_error("policy CSV: unknown slot '" + row[1] + "'");
  }
  return pol;
}

// ---------------------------------------------------------------- SVG

namespace svg {

inline constexpr double kWidth = 800.0;
inline constexpr double kHeight = 500.0;

inline std::string escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string header(std::string_view title) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n"
         "<title>" +
         escape(title) + "</title>\n<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
}

inline std::string footer() { return "</svg>\n"; }

inline std::string text(double x, double y, std::string_view s, std::string_view anchor = "middle", int size = 12) {
  return "<text x=\"" + fixed6(x) + "\" y=\"" + fixed6(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + std::string(anchor) + "\">" + escape(s) + "</text>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, std::string_view stroke = "black") {
  return "<line x1=\"" + fixed6(x1) + "\" y1=\"" + fixed6(y1) + "\" x2=\"" + fixed6(x2) + "\" y2=\"" + fixed6(y2) +
         "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1\"/>\n";
}

inline std::string_view ball_fill(BallColor c) {
  switch (c) {
    case BallColor::Purple: return "#7b2d8e";
    case BallColor::Orange: return "#f28e1c";
    case BallColor::Pink: return "#f4a6c8";
  }
  return "#000000";
}

}  // namespace svg

// Four panels: the first-pick distribution, then the second-pick distribution
// given each possible first pick.
inline std::string policy_bars_svg(const GoalConditionedPolicy& pol, Goal g, std::string_view title = "") {
  const PolicyTable& table = pol[g];
  std::string out = svg::header(title.empty() ? "Policy for goal " + std::string(to_string(g)) : std::string(title));
  out += svg::text(400, 30, title.empty() ? "Policy for goal " + std::string(to_string(g)) : std::string(title),
                   "middle", 18);

  constexpr double top = 70, bottom = 430, left = 60, panel_w = 170, gap = 13, bar_w = 40;
  const double plot_h = bottom - top;
  for (std::size_t panel = 0; panel < 4; ++panel) {
    const double x0 = left + static_cast<double>(panel) * (panel_w + gap);
    const ActionDistribution probs = panel == 0 ? table.first_probs() : table.second_probs(color_at(panel - 1));
    const std::string label =
        panel == 0 ? "first pick" : "second | " + std::string(to_string(color_at(panel - 1)));
    out += "<g class=\"panel\" data-panel=\"" + label + "\">\n";
    out += svg::line(x0, bottom, x0 + panel_w, bottom);
    out += svg::line(x0, top, x0, bottom);
    for (double tick : {0.0, 0.5, 1.0}) {
      const double y = bottom - tick * plot_h;
      out += svg::line(x0 - 4, y, x0, y);
      if (panel == 0) out += svg::text(x0 - 8, y + 4, fixed6(tick).substr(0, 3), "end", 10);
    }
    for (std::size_t c = 0; c < kNumColors; ++c) {
      const double h = probs[c] * plot_h;
      const double x = x0 + 15 + static_cast<double>(c) * (bar_w + 15);
      out += "<rect class=\"bar\" data-color=\"" + std::string(to_string(color_at(c))) + "\" data-probability=\"" +
             fixed6(probs[c]) + "\" x=\"" + fixed6(x) + "\" y=\"" + fixed6(bottom - h) + "\" width=\"" +
             fixed6(bar_w) + "\" height=\"" + fixed6(h) + "\" fill=\"" + std::string(svg::ball_fill(color_at(c))) +
             "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
      out += svg::text(x + bar_w / 2, bottom + 16, to_string(color_at(c)), "middle", 10);
    }
    out += svg::text(x0 + panel_w / 2, bottom + 40, label, "middle", 13);
    out += "</g>\n";
  }
  out += svg::text(20, (top + bottom) / 2, "probability", "middle", 12);
  return out + svg::footer();
}

inline void render_policy_bars(const GoalConditionedPolicy& pol, Goal g, const std::filesystem::path& path,
                               std::string_view title = "") {
  write_text_file(path, policy_bars_svg(pol, g, title));
}

enum class Metric { Predictability, Reachability };

inline std::string_view to_string(Metric m) { return m == Metric::Predictability ? "predictability" : "reachability"; }

struct CurveBand {
  std::vector<int> episodes;
  std::vector<double> mean;
  std::vector<double> stddev;  // population formula; zero for a single seed
};

inline CurveBand aggregate_curves(const std::vector<MetricsSeries>& seeds, Metric metric) {
  if (seeds.empty()) throw std::invalid_argument("aggregate_curves: no series");
  CurveBand band;
  for (const auto& p : seeds.front().points) band.episodes.push_back(p.episode);
  const double n = static_cast<double>(seeds.size());
  for (std::size_t i = 0; i < band.episodes.size(); ++i) {
    double mean = 0.0;
    for (const auto& s : seeds) {
      if (s.points.size() != band.episodes.size() || s.points[i].episode != band.episodes[i])
        throw std::invalid_argument("aggregate_curves: series have different evaluation schedules");
      mean += (metric == Metric::Predictability ? s.points[i].predictability : s.points[i].reachability) / n;
    }
    double var = 0.0;
    for (const auto& s : seeds) {
      const double v = metric == Metric::Predictability ? s.points[i].predictability : s.points[i].reachability;
      var += (v - mean) * (v - mean) / n;
    }
    band.mean.push_back(mean);
    band.stddev.push_back(std::sqrt(var));
  }
  return band;
}

inline std::string_view condition_stroke(Condition c) {
  if (c.tutor == TutorMode::Naive) return c.learner == LearnerMode::Literal ? "#4c72b0" : "#55a868";
  return c.learner == LearnerMode::Literal ? "#c44e52" : "#8172b2";
}

inline std::string learning_curves_svg(const std::map<Condition, std::vector<MetricsSeries>>& grid, Metric metric) {
  if (grid.empty()) throw std::invalid_argument("render_learning_curves: no results");
  const std::string title = metric == Metric::Predictability ? "Predictability (goal prediction accuracy)"
                                                             : "Reachability (goal reaching accuracy)";
  std::string out = svg::header(title);
  out += svg::text(400, 30, title, "middle", 18);

  constexpr double left = 70, right = 600, top = 60, bottom = 440;
  int max_episode = 0;
  for (const auto& [c, seeds] : grid)
    for (const auto& s : seeds)
      for (const auto& p : s.points) max_episode = std::max(max_episode, p.episode);
  const double x_span = max_episode > 0 ? static_cast<double>(max_episode) : 1.0;
  auto px = [&](int ep) { return left + (right - left) * static_cast<double>(ep) / x_span; };
  auto py = [&](double v) { return bottom - (bottom - top) * std::clamp(v, 0.0, 1.0); };

  out += svg::line(left, bottom, right, bottom);
  out += svg::line(left, top, left, bottom);
  for (int k = 0; k <= 4; ++k) {
    const double v = k / 4.0;
    out += svg::line(left - 4, py(v), left, py(v));
    out += svg::text(left - 8, py(v) + 4, fixed6(v).substr(0, 4), "end", 10);
  }
  for (int k = 0; k <= 4; ++k) {
    const int ep = static_cast<int>(std::lround(x_span * k / 4.0));
    out += svg::line(px(ep), bottom, px(ep), bottom + 4);
    out += svg::text(px(ep), bottom + 18, std::to_string(ep), "middle", 10);
  }
  out += svg::text((left + right) / 2, bottom + 40, "episode", "middle", 12);
  out += svg::text(25, (top + bottom) / 2, std::string(to_string(metric)), "middle", 12);

  int legend_row = 0;
  for (const auto& [cond, seeds] : grid) {
    const CurveBand band = aggregate_curves(seeds, metric);
    const std::string stroke(condition_stroke(cond));
    const std::string name = to_string(cond);

    std::string upper, lower;
    for (std::size_t i = 0; i < band.episodes.size(); ++i)
      upper += fixed6(px(band.episodes[i])) + "," + fixed6(py(band.mean[i] + band.stddev[i])) + " ";
    for (std::size_t i = band.episodes.size(); i-- > 0;)
      lower += fixed6(px(band.episodes[i])) + "," + fixed6(py(band.mean[i] - band.stddev[i])) + " ";
    std::string curve;
    for (std::size_t i = 0; i < band.episodes.size(); ++i) {
      if (i) curve += ' ';
      curve += fixed6(px(band.episodes[i])) + "," + fixed6(py(band.mean[i]));
    }
    if (!upper.empty()) upper.pop_back();
    out += "<g class=\"condition\" data-condition=\"" + name + "\">\n";
    out += "<polygon class=\"band\" points=\"" + upper + " " + lower.substr(0, lower.size() - 1) + "\" fill=\"" +
           stroke + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    out += "<polyline class=\"mean\" points=\"" + curve + "\" fill=\"none\" stroke=\"" + stroke +
           "\" stroke-width=\"2\"/>\n";
    out += "</g>\n";

    const double ly = top + 10 + 22.0 * legend_row++;
    out += "<g class=\"legend\">\n";
    out += svg::line(615, ly, 645, ly, stroke);
    out += svg::text(652, ly + 4, name, "start", 12);
    out += "</g>\n";
  }
  return out + svg::footer();
}

inline void render_learning_curves(const std::map<Condition, std::vector<MetricsSeries>>& grid, Metric metric,
                                   const std::filesystem::path& path) {
  write_text_file(path, learning_curves_svg(grid, metric));
}

}  // namespace tutorsim
