#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rail/core/rng.hpp"

namespace rail::sim {

// Thresholds of the rule-based demonstrator. Gaps are measured from the host
// center to the nearest bumper of the other vehicle, in meters.
struct ExpertRules {
  double gap_open = 40.0;   // accelerate when the lane ahead is clearer than this
  double gap_close = 25.0;  // below this the host must change lane or brake
  double gap_safe = 30.0;   // minimum forward gap in a target lane
  double rear_safe = 12.0;  // minimum rear gap in a target lane

  bool operator==(const ExpertRules&) const = default;
};

struct HighwayConfig {
  int lane_count = 5;
  double lane_width = 3.5;        // m
  double road_length = 1500.0;    // m, looped
  int ray_count = 24;             // rays over 360 degrees
  double max_range = 50.0;        // m
  int frame_stack = 3;
  double decision_hz = 5.0;
  double vel_acc = 5.0;           // km/h per decision
  double vel_dec = 5.0;           // km/h per decision
  double host_speed_min = 40.0;   // km/h
  double host_speed_max = 100.0;  // km/h
  double traffic_density = 40.0;  // vehicles per km of road, all lanes
  double traffic_speed_min = 50.0;
  double traffic_speed_max = 75.0;
  int episode_horizon = 200;
  std::uint64_t seed = 0;
  double vehicle_length = 4.5;
  double vehicle_width = 1.8;
  double lane_change_seconds = 1.0;
  double min_headway = 20.0;      // m between same-lane vehicles at spawn
  ExpertRules expert{};

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  int lane_change_steps() const;
  double step_seconds() const { return 1.0 / decision_hz; }
  std::size_t frame_size() const { return static_cast<std::size_t>(2 * ray_count + 1); }
  std::size_t observation_size() const { return frame_size() * static_cast<std::size_t>(frame_stack); }

  bool operator==(const HighwayConfig&) const = default;
};

enum class DrivingAction : std::uint8_t {
  kMaintain = 0,
  kAccelerate = 1,
  kDecelerate = 2,
  kLaneLeft = 3,
  kLaneRight = 4,
};

inline constexpr int kActionCount = 5;

// Throws DomainError when id is outside [0, 4].
DrivingAction action_from_id(int id);
inline int action_id(DrivingAction a) { return static_cast<int>(a); }

struct HostVehicle {
  int lane_index = 0;        // lane the current maneuver started from
  double position = 0.0;     // longitudinal, m in [0, road_length)
  double speed = 0.0;        // km/h
  int maneuver_dir = 0;      // -1 toward lane_index-1 (left), +1 right, 0 none
  int maneuver_steps = 0;    // completed maneuver steps toward the target lane
  bool returning = false;    // an aborted maneuver heading back to lane_index

  bool operator==(const HostVehicle&) const = default;
};

struct TrafficVehicle {
  int lane_index = 0;
  double position = 0.0;
  double cruise_speed = 0.0;  // km/h, constant per episode
  double speed = 0.0;         // km/h, current

  bool operator==(const TrafficVehicle&) const = default;
};

using Observation = std::vector<double>;

struct HighwayState {
  HostVehicle host;
  std::vector<TrafficVehicle> traffic;
  int step_index = 0;
  bool terminated = false;
  Rng rng;
  // K frames, newest first, each HighwayConfig::frame_size() long.
  std::vector<double> frames;

  // Lateral offset of the host from the center of lane_index, in meters
  // (positive toward higher lane indices).
  double lateral_offset(const HighwayConfig& config) const;
  std::optional<double> lane_change_progress(const HighwayConfig& config) const;

  bool operator==(const HighwayState&) const = default;
};

struct StepInfo {
  bool collision = false;
  bool horizon_reached = false;
  int overtakes_delta = 0;
  bool lane_change_completed = false;
  bool lane_change_refused = false;
};

struct StepOutcome {
  Observation observation;
  double longitudinal_reward = 0.0;  // evaluation only
  double lateral_reward = 0.0;       // evaluation only, <= 0
  bool terminated = false;
  StepInfo info;
};

struct LidarScan {
  std::vector<double> distances;   // normalized by max_range, 1.0 = no hit
  std::vector<double> rel_speeds;  // (v_hit - v_host) / host_speed_max, 0 = no hit
};

// Ray i points at i * 360/ray_count degrees counterclockwise from the heading.
LidarScan lidar_scan(const HighwayState& state, const HighwayConfig& config);

// Shortest signed longitudinal distance from `from` to `to` on the loop,
// in [-road_length/2, road_length/2).
double wrap_delta(double from, double to, double road_length);

// The environment. Immutable after construction; reset/step are pure
// functions of their arguments, so one Highway can serve many threads.
class Highway {
 public:
  explicit Highway(HighwayConfig config);

  const HighwayConfig& config() const noexcept { return config_; }
  std::size_t observation_size() const noexcept { return config_.observation_size(); }

  std::pair<HighwayState, Observation> reset(std::uint64_t seed) const;
  std::pair<HighwayState, StepOutcome> step(const HighwayState& state, DrivingAction action) const;
  Observation observe(const HighwayState& state) const;

  // Host lateral position in meters from the center of lane 0.
  double host_lateral(const HighwayState& state) const;
  // Builds a state with the given vehicles and fresh frames (for scripted scenes).
  HighwayState make_state(HostVehicle host, std::vector<TrafficVehicle> traffic,
                          std::uint64_t seed = 0) const;

 private:
  std::vector<double> frame(const HighwayState& state) const;
  bool host_collides(const HighwayState& state) const;

  HighwayConfig config_;
};

}  // namespace rail::sim
