#include "rail/sim/expert.hpp"

#include <algorithm>

namespace rail::sim {

double forward_gap(const HighwayState& state, const HighwayConfig& config, int lane) {
  double gap = config.max_range;
  if (lane < 0 || lane >= config.lane_count) return gap;
  for (const auto& v : state.traffic) {
    if (v.lane_index != lane) continue;
    const double dx = wrap_delta(state.host.position, v.position, config.road_length);
    if (dx <= 0.0) continue;
    gap = std::min(gap, std::max(0.0, dx - config.vehicle_length / 2));
  }
  return gap;
}

double rear_gap(const HighwayState& state, const HighwayConfig& config, int lane) {
  double gap = config.max_range;
  if (lane < 0 || lane >= config.lane_count) return gap;
  for (const auto& v : state.traffic) {
    if (v.lane_index != lane) continue;
    const double dx = wrap_delta(state.host.position, v.position, config.road_length);
    if (dx > 0.0) continue;
    gap = std::min(gap, std::max(0.0, -dx - config.vehicle_length / 2));
  }
  return gap;
}

double closing_speed(const HighwayState& state, const HighwayConfig& config, int lane) {
  const TrafficVehicle* leader = nullptr;
  double best = config.max_range;
  for (const auto& v : state.traffic) {
    if (v.lane_index != lane) continue;
    const double dx = wrap_delta(state.host.position, v.position, config.road_length);
    if (dx <= 0.0) continue;
    const double gap = std::max(0.0, dx - config.vehicle_length / 2);
    if (gap <= best) {
      best = gap;
      leader = &v;
    }
  }
  return leader ? state.host.speed - leader->speed : 0.0;
}

DrivingAction scripted_expert(const Observation& /*observation*/, const HighwayState& state,
                              const HighwayConfig& config) {
  const auto& rules = config.expert;
  const auto& host = state.host;
  const bool at_top = host.speed >= config.host_speed_max;

  if (host.maneuver_dir != 0) {
    // Hold the lateral command until the maneuver completes, braking only
    // for a closing leader in the target lane or close ahead in the origin lane.
    const int motion = host.returning ? -host.maneuver_dir : host.maneuver_dir;
    const int target = host.returning ? host.lane_index : host.lane_index + host.maneuver_dir;
    const int origin = host.returning ? host.lane_index + host.maneuver_dir : host.lane_index;
    const bool target_threat = forward_gap(state, config, target) < rules.gap_close &&
                               closing_speed(state, config, target) > 0.0;
    const bool origin_threat = forward_gap(state, config, origin) < rules.gap_close / 2 &&
                               closing_speed(state, config, origin) > 0.0;
    if (target_threat || origin_threat) return DrivingAction::kDecelerate;
    return motion < 0 ? DrivingAction::kLaneLeft : DrivingAction::kLaneRight;
  }

  const double ahead = forward_gap(state, config, host.lane_index);
  if (ahead > rules.gap_open) return at_top ? DrivingAction::kMaintain : DrivingAction::kAccelerate;
  if (ahead >= rules.gap_close) return DrivingAction::kMaintain;

  auto usable = [&](int lane, double& gap) {
    if (lane < 0 || lane >= config.lane_count) return false;
    gap = forward_gap(state, config, lane);
    return gap > rules.gap_safe && rear_gap(state, config, lane) > rules.rear_safe;
  };
  double left_gap = 0.0;
  double right_gap = 0.0;
  const bool left_ok = usable(host.lane_index - 1, left_gap);
  const bool right_ok = usable(host.lane_index + 1, right_gap);
  if (left_ok && (!right_ok || left_gap >= right_gap)) return DrivingAction::kLaneLeft;
  if (right_ok) return DrivingAction::kLaneRight;
  return closing_speed(state, config, host.lane_index) > 0.0 ? DrivingAction::kDecelerate
                                                             : DrivingAction::kMaintain;
}

}  // namespace rail::sim
