#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tutorsim {

enum class BallColor : std::uint8_t { Purple = 0, Orange = 1, Pink = 2 };
enum class Goal : std::uint8_t { NoGoal = 0, Goal1 = 1, Goal2 = 2 };

inline constexpr std::size_t kNumColors = 3;
inline constexpr std::size_t kNumGoals = 3;
inline constexpr std::size_t kNumTrajectories = kNumColors * kNumColors;

inline constexpr std::array<BallColor, kNumColors> kAllColors{BallColor::Purple, BallColor::Orange,
                                                               BallColor::Pink};
inline constexpr std::array<Goal, kNumGoals> kAllGoals{Goal::NoGoal, Goal::Goal1, Goal::Goal2};

constexpr std::size_t index(BallColor c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index(Goal g) { return static_cast<std::size_t>(g); }

constexpr BallColor color_at(std::size_t i) {
  if (i >= kNumColors) throw std::out_of_range("color index out of range");
  return kAllColors[i];
}
constexpr Goal goal_at(std::size_t i) {
  if (i >= kNumGoals) throw std::out_of_range("goal index out of range");
  return kAllGoals[i];
}

inline std::string_view to_string(BallColor c) {
  switch (c) {
    case BallColor::Purple: return "purple";
    case BallColor::Orange: return "orange";
    case BallColor::Pink: return "pink";
  }
  return "?";
}

inline std::string_view to_string(Goal g) {
  switch (g) {
    case Goal::NoGoal: return "none";
    case Goal::Goal1: return "g1";
    case Goal::Goal2: return "g2";
  }
  return "?";
}

inline BallColor parse_color(std::string_view s) {
  for (auto c : kAllColors)
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown ball color '" + std::string(s) + "'");
}

inline Goal parse_goal(std::string_view s) {
  for (auto g : kAllGoals)
    if (to_string(g) == s) return g;
  throw std::invalid_argument("unknown goal '" + std::string(s) + "'");
}

// One episode: exactly two consecutive picks.
struct Trajectory {
  BallColor first;
  BallColor second;

  constexpr std::size_t index() const { return tutorsim::index(first) * kNumColors + tutorsim::index(second); }
  static constexpr Trajectory from_index(std::size_t i) {
    return {color_at(i / kNumColors), color_at(i % kNumColors)};
  }
  friend constexpr bool operator==(Trajectory, Trajectory) = default;
};

inline std::string to_string(Trajectory t) {
  return "(" + std::string(to_string(t.first)) + ", " + std::string(to_string(t.second)) + ")";
}

// Goals achieved by a trajectory. NoGoal is the empty set, never a member.
class OutcomeSet {
 public:
  constexpr OutcomeSet() = default;
  constexpr OutcomeSet(bool goal1, bool goal2) : goal1_(goal1), goal2_(goal2) {}

  constexpr bool contains(Goal g) const {
    switch (g) {
      case Goal::Goal1: return goal1_;
      case Goal::Goal2: return goal2_;
      case Goal::NoGoal: return false;
    }
    return false;
  }
  constexpr bool empty() const { return !goal1_ && !goal2_; }
  constexpr std::size_t size() const { return std::size_t{goal1_} + std::size_t{goal2_}; }

  friend constexpr bool operator==(OutcomeSet, OutcomeSet) = default;

 private:
  bool goal1_ = false;
  bool goal2_ = false;
};

// "none", "g1", "g2" or "g1|g2".
inline std::string to_string(OutcomeSet o) {
  if (o.empty()) return "none";
  if (o.size() == 2) return "g1|g2";
  return o.contains(Goal::Goal1) ? "g1" : "g2";
}

inline OutcomeSet parse_outcome(std::string_view s) {
  if (s == "none") return {};
  if (s == "g1") return {true, false};
  if (s == "g2") return {false, true};
  if (s == "g1|g2") return {true, true};
  throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

constexpr OutcomeSet outcome(Trajectory t) {
  using enum BallColor;
  if (t == Trajectory{Orange, Orange} || t == Trajectory{Pink, Orange}) return {true, false};
  if (t == Trajectory{Orange, Pink}) return {true, true};
  return {};
}

constexpr bool goal_satisfied(Goal g, OutcomeSet o) {
  return g == Goal::NoGoal ? o.empty() : o.contains(g);
}

// Proportions of each color in the bucket. Purple must dominate.
struct BucketPrior {
  std::array<double, kNumColors> p{0.5, 0.25, 0.25};

  double operator[](BallColor c) const { return p[index(c)]; }

  // Throws std::invalid_argument describing the violated invariant.
  void validate() const {
    double sum = 0.0;
    for (double v : p) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw std::invalid_argument("bucket_prior: probabilities must lie in [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("bucket_prior: probabilities must sum to 1");
    if (!(p[0] > p[1] && p[0] > p[2]))
      throw std::invalid_argument("bucket_prior: purple must be strictly more likely than orange and pink");
  }

  // Expected number of purple balls in a naive two-ball draw.
  double expected_purple_per_demo() const { return 2.0 * p[index(BallColor::Purple)]; }

  friend bool operator==(const BucketPrior&, const BucketPrior&) = default;
};

// Independent draws from fixed proportions.
inline double prior_trajectory_prob(const BucketPrior& prior, Trajectory t) {
  return prior[t.first] * prior[t.second];
}

inline int purple_count(Trajectory t) {
  return int{t.first == BallColor::Purple} + int{t.second == BallColor::Purple};
}

}  // namespace tutorsim
