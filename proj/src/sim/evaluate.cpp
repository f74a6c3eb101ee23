#include "rail/sim/evaluate.hpp"

#include <cstdio>
#include <sstream>

#include "rail/core/error.hpp"
#include "rail/sim/expert.hpp"

namespace rail::sim {

std::string driving_stats_csv(const DrivingStats& s) {
  char row[256];
  std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.avg_speed, s.lane_changes,
                s.overtakes, s.longitudinal_sum, s.lateral_sum);
  return std::string(kDrivingStatsHeader) + "\n" + row;
}

DrivingStats parse_driving_stats_csv(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  std::string row;
  if (!std::getline(in, header) || header != kDrivingStatsHeader || !std::getline(in, row)) {
    throw FormatError("driving stats CSV must have header '" + std::string(kDrivingStatsHeader) +
                      "' and one data row");
  }
  DrivingStats s;
  if (std::sscanf(row.c_str(), "%lf,%lf,%lf,%lf,%lf", &s.avg_speed, &s.lane_changes,
                  &s.overtakes, &s.longitudinal_sum, &s.lateral_sum) != 5) {
    throw FormatError("malformed driving stats row: " + row);
  }
  return s;
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode) {
  return derive_seed({seed, 0x6576616cULL, episode});
}

DrivingStats run_episode(const Highway& env, const DrivingPolicy& policy, std::uint64_t seed,
                         Trajectory* trajectory) {
  auto [state, obs] = env.reset(seed);
  if (trajectory) trajectory->state_dim = obs.size();
  DrivingStats stats;
  double speed_sum = 0.0;
  int steps = 0;
  while (!state.terminated) {
    const DrivingAction action = policy(obs, state);
    auto [next, outcome] = env.step(state, action);
    if (trajectory) {
      trajectory->push(obs, static_cast<std::uint8_t>(action_id(action)));
      trajectory->metrics.push_back({next.host.speed, outcome.longitudinal_reward,
                                     outcome.lateral_reward, outcome.info.overtakes_delta,
                                     outcome.info.lane_change_completed, outcome.info.collision});
    }
    speed_sum += next.host.speed;
    ++steps;
    stats.lane_changes += outcome.info.lane_change_completed ? 1 : 0;
    stats.overtakes += outcome.info.overtakes_delta;
    stats.longitudinal_sum += outcome.longitudinal_reward;
    stats.lateral_sum += outcome.lateral_reward;
    state = std::move(next);
    obs = std::move(outcome.observation);
  }
  stats.avg_speed = speed_sum / steps;
  return stats;
}

DrivingStats evaluate_policy(const Highway& env, const DrivingPolicy& policy, int episodes,
                             std::uint64_t seed) {
  if (episodes < 1) throw DomainError("evaluate_policy needs at least one episode");
  DrivingStats total;
  for (int i = 0; i < episodes; ++i) {
    const DrivingStats s = run_episode(env, policy, episode_seed(seed, static_cast<std::uint64_t>(i)));
    total.avg_speed += s.avg_speed;
    total.lane_changes += s.lane_changes;
    total.overtakes += s.overtakes;
    total.longitudinal_sum += s.longitudinal_sum;
    total.lateral_sum += s.lateral_sum;
  }
  const double inv = 1.0 / episodes;
  total.avg_speed *= inv;
  total.lane_changes *= inv;
  total.overtakes *= inv;
  total.longitudinal_sum *= inv;
  total.lateral_sum *= inv;
  return total;
}

DrivingPolicy expert_policy(const HighwayConfig& config) {
  return [config](const Observation& obs, const HighwayState& state) {
    return scripted_expert(obs, state, config);
  };
}

}  // namespace rail::sim
