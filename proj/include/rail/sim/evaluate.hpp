#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "rail/core/trajectory.hpp"
#include "rail/sim/highway.hpp"

namespace rail::sim {

// Decision rule driven through an episode. Learned policies ignore the state;
// the scripted expert reads it.
using DrivingPolicy = std::function<DrivingAction(const Observation&, const HighwayState&)>;

// Per-episode averages of the driving statistics.
struct DrivingStats {
  double avg_speed = 0.0;         // km/h, mean over steps
  double lane_changes = 0.0;      // completed lane changes
  double overtakes = 0.0;
  double longitudinal_sum = 0.0;  // sum of longitudinal rewards
  double lateral_sum = 0.0;       // sum of lateral rewards

  bool operator==(const DrivingStats&) const = default;
};

inline constexpr const char* kDrivingStatsHeader =
    "avg_speed,lane_changes,overtakes,longitudinal,lateral";

std::string driving_stats_csv(const DrivingStats& stats);
DrivingStats parse_driving_stats_csv(const std::string& text);

// Runs one episode from reset(seed). When `trajectory` is non-null, the
// observation seen before each decision, the action and the step metrics are
// appended to it.
DrivingStats run_episode(const Highway& env, const DrivingPolicy& policy, std::uint64_t seed,
                         Trajectory* trajectory = nullptr);

// Seed of the i-th evaluation episode of an evaluation run.
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode);

// Averages run_episode over episodes with seeds episode_seed(seed, i).
DrivingStats evaluate_policy(const Highway& env, const DrivingPolicy& policy, int episodes,
                             std::uint64_t seed);

DrivingPolicy expert_policy(const HighwayConfig& config);

}  // namespace rail::sim
