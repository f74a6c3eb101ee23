#include "rail/sim/highway.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rail/core/error.hpp"

namespace rail::sim {

namespace {

constexpr double kKmhToMs = 1.0 / 3.6;
// A traffic vehicle closing on the host from behind matches the host speed
// once the bumper gap falls below this many meters.
constexpr double kTrafficFollowGap = 8.0;

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void HighwayConfig::validate() const {
  require(lane_count >= 2, "lane_count", "must be >= 2");
  require(finite_positive(lane_width), "lane_width", "must be > 0");
  require(finite_positive(road_length), "road_length", "must be > 0");
  require(ray_count >= 1 && 360 % ray_count == 0, "ray_count",
          "must divide 360 into an integer number of degrees per ray");
  require(finite_positive(max_range), "max_range", "must be > 0");
  require(road_length > 4.0 * (max_range + vehicle_length), "road_length",
          "must exceed 4 * (max_range + vehicle_length)");
  require(frame_stack >= 1, "frame_stack", "must be >= 1");
  require(finite_positive(decision_hz), "decision_hz", "must be > 0");
  require(finite_positive(vel_acc), "vel_acc", "must be > 0");
  require(finite_positive(vel_dec), "vel_dec", "must be > 0");
  require(std::isfinite(host_speed_min) && host_speed_min >= 0.0, "host_speed_bounds",
          "minimum must be >= 0");
  require(std::isfinite(host_speed_max) && host_speed_max > host_speed_min, "host_speed_bounds",
          "maximum must exceed minimum");
  require(std::isfinite(traffic_density) && traffic_density >= 0.0, "traffic_density",
          "must be >= 0");
  require(std::isfinite(traffic_speed_min) && traffic_speed_min >= 0.0 &&
              std::isfinite(traffic_speed_max) && traffic_speed_max >= traffic_speed_min,
          "traffic_speed_bounds", "must satisfy 0 <= min <= max");
  require(episode_horizon >= 1, "episode_horizon", "must be >= 1");
  require(finite_positive(vehicle_length), "vehicle_length", "must be > 0");
  require(finite_positive(vehicle_width) && vehicle_width < lane_width, "vehicle_width",
          "must be > 0 and narrower than a lane");
  require(finite_positive(lane_change_seconds) && lane_change_steps() >= 1,
          "lane_change_seconds", "must last at least one decision step");
  require(std::isfinite(min_headway) && min_headway >= vehicle_length, "min_headway",
          "must be >= vehicle_length");
  require(std::isfinite(expert.gap_open) && std::isfinite(expert.gap_close) &&
              expert.gap_close > 0.0 && expert.gap_open >= expert.gap_close,
          "expert", "need 0 < gap_close <= gap_open");
  require(std::isfinite(expert.gap_safe) && expert.gap_safe > 0.0, "expert",
          "gap_safe must be > 0");
  require(std::isfinite(expert.rear_safe) && expert.rear_safe >= 0.0, "expert",
          "rear_safe must be >= 0");
}

int HighwayConfig::lane_change_steps() const {
  return static_cast<int>(std::lround(lane_change_seconds * decision_hz));
}

DrivingAction action_from_id(int id) {
  if (id < 0 || id >= kActionCount) {
    throw DomainError("action id " + std::to_string(id) + " outside [0, 4]");
  }
  return static_cast<DrivingAction>(id);
}

double HighwayState::lateral_offset(const HighwayConfig& config) const {
  if (host.maneuver_dir == 0) return 0.0;
  return host.maneuver_dir * config.lane_width * host.maneuver_steps /
         static_cast<double>(config.lane_change_steps());
}

std::optional<double> HighwayState::lane_change_progress(const HighwayConfig& config) const {
  if (host.maneuver_dir == 0) return std::nullopt;
  return host.maneuver_steps / static_cast<double>(config.lane_change_steps());
}

double wrap_delta(double from, double to, double road_length) {
  double d = std::fmod(to - from, road_length);
  if (d >= road_length / 2) d -= road_length;
  if (d < -road_length / 2) d += road_length;
  return d;
}

LidarScan lidar_scan(const HighwayState& state, const HighwayConfig& config) {
  const auto rays = static_cast<std::size_t>(config.ray_count);
  LidarScan scan{std::vector<double>(rays, config.max_range), std::vector<double>(rays, 0.0)};

  const double host_y = state.host.lane_index * config.lane_width + state.lateral_offset(config);
  const double half_len = config.vehicle_length / 2;
  const double half_wid = config.vehicle_width / 2;
  const double reach = config.max_range + config.vehicle_length;

  struct Box {
    double x_lo, x_hi, y_lo, y_hi, speed;
  };
  std::vector<Box> boxes;
  for (const auto& v : state.traffic) {
    const double dx = wrap_delta(state.host.position, v.position, config.road_length);
    // Lateral axis points left, i.e. toward lower lane indices.
    const double dl = host_y - v.lane_index * config.lane_width;
    if (std::abs(dx) > reach || std::abs(dl) > reach) continue;
    boxes.push_back({dx - half_len, dx + half_len, dl - half_wid, dl + half_wid, v.speed});
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rays; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(rays);
    const double c = i == 0 ? 1.0 : std::cos(angle);
    const double s = i == 0 ? 0.0 : std::sin(angle);
    double best = config.max_range;
    double best_speed = 0.0;
    bool hit = false;
    for (const auto& b : boxes) {
      double t_lo = 0.0;
      double t_hi = kInf;
      bool miss = false;
      auto slab = [&](double dir, double lo, double hi) {
        if (std::abs(dir) < 1e-12) {
          if (lo > 0.0 || hi < 0.0) miss = true;
          return;
        }
        double t1 = lo / dir;
        double t2 = hi / dir;
        if (t1 > t2) std::swap(t1, t2);
        t_lo = std::max(t_lo, t1);
        t_hi = std::min(t_hi, t2);
      };
      slab(c, b.x_lo, b.x_hi);
      slab(s, b.y_lo, b.y_hi);
      if (miss || t_hi < t_lo) continue;
      if (t_lo <= best) {
        if (!hit || t_lo < best) best_speed = b.speed;
        best = t_lo;
        hit = true;
      }
    }
    scan.distances[i] = std::min(best, config.max_range) / config.max_range;
    if (hit && best <= config.max_range) {
      scan.rel_speeds[i] = (best_speed - state.host.speed) / config.host_speed_max;
    } else {
      scan.distances[i] = 1.0;
    }
  }
  return scan;
}

Highway::Highway(HighwayConfig config) : config_(std::move(config)) { config_.validate(); }

double Highway::host_lateral(const HighwayState& state) const {
  return state.host.lane_index * config_.lane_width + state.lateral_offset(config_);
}

std::vector<double> Highway::frame(const HighwayState& state) const {
  const LidarScan scan = lidar_scan(state, config_);
  std::vector<double> out;
  out.reserve(config_.frame_size());
  out.insert(out.end(), scan.distances.begin(), scan.distances.end());
  out.insert(out.end(), scan.rel_speeds.begin(), scan.rel_speeds.end());
  out.push_back(state.host.speed / config_.host_speed_max);
  return out;
}

Observation Highway::observe(const HighwayState& state) const { return state.frames; }

HighwayState Highway::make_state(HostVehicle host, std::vector<TrafficVehicle> traffic,
                                 std::uint64_t seed) const {
  HighwayState state;
  state.host = host;
  state.traffic = std::move(traffic);
  state.rng = Rng(seed);
  const auto first = frame(state);
  state.frames.clear();
  for (int k = 0; k < config_.frame_stack; ++k) {
    state.frames.insert(state.frames.end(), first.begin(), first.end());
  }
  return state;
}

std::pair<HighwayState, Observation> Highway::reset(std::uint64_t seed) const {
  Rng rng(seed);
  HostVehicle host;
  host.lane_index = config_.lane_count / 2;
  host.position = 0.0;
  host.speed = 0.5 * (config_.host_speed_min + config_.host_speed_max);

  const auto wanted =
      static_cast<int>(std::lround(config_.traffic_density * config_.road_length / 1000.0));
  std::vector<TrafficVehicle> traffic;
  traffic.reserve(static_cast<std::size_t>(wanted));
  constexpr int kAttempts = 50;
  for (int i = 0; i < wanted; ++i) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      TrafficVehicle v;
      v.lane_index = static_cast<int>(rng.below(static_cast<std::uint64_t>(config_.lane_count)));
      v.position = rng.uniform(0.0, config_.road_length);
      v.cruise_speed = rng.uniform(config_.traffic_speed_min, config_.traffic_speed_max);
      v.speed = v.cruise_speed;
      const double to_host = std::abs(wrap_delta(host.position, v.position, config_.road_length));
      const double host_clearance =
          v.lane_index == host.lane_index ? 2.0 * config_.min_headway : 2.0 * config_.vehicle_length;
      bool ok = to_host >= host_clearance;
      for (const auto& other : traffic) {
        if (!ok) break;
        if (other.lane_index == v.lane_index &&
            std::abs(wrap_delta(other.position, v.position, config_.road_length)) <
                config_.min_headway) {
          ok = false;
        }
      }
      if (ok) {
        traffic.push_back(v);
        break;
      }
    }
  }

  HighwayState state = make_state(host, std::move(traffic));
  state.rng = rng;
  return {state, state.frames};
}

bool Highway::host_collides(const HighwayState& state) const {
  const double host_y = host_lateral(state);
  for (const auto& v : state.traffic) {
    const double dx = wrap_delta(state.host.position, v.position, config_.road_length);
    const double dy = v.lane_index * config_.lane_width - host_y;
    if (std::abs(dx) < config_.vehicle_length && std::abs(dy) < config_.vehicle_width) return true;
  }
  return false;
}

std::pair<HighwayState, StepOutcome> Highway::step(const HighwayState& state,
                                                    DrivingAction action) const {
  if (state.terminated) throw StateError("step called on a terminated episode");
  if (action_id(action) < 0 || action_id(action) >= kActionCount) {
    throw DomainError("action id " + std::to_string(action_id(action)) + " outside [0, 4]");
  }

  HighwayState next = state;
  StepOutcome out;
  auto& host = next.host;

  if (action == DrivingAction::kAccelerate) {
    host.speed = std::min(config_.host_speed_max, host.speed + config_.vel_acc);
  } else if (action == DrivingAction::kDecelerate) {
    host.speed = std::max(config_.host_speed_min, host.speed - config_.vel_dec);
  }

  const int total = config_.lane_change_steps();
  const bool lateral_request =
      action == DrivingAction::kLaneLeft || action == DrivingAction::kLaneRight;
  const int requested_dir = action == DrivingAction::kLaneLeft ? -1 : 1;
  bool maneuvering = false;
  if (host.maneuver_dir != 0) {
    maneuvering = true;
    const int motion = host.returning ? -host.maneuver_dir : host.maneuver_dir;
    if (lateral_request && requested_dir == -motion) host.returning = !host.returning;
    host.maneuver_steps += host.returning ? -1 : 1;
  } else if (lateral_request) {
    const int target = host.lane_index + requested_dir;
    maneuvering = true;
    if (target < 0 || target >= config_.lane_count) {
      out.info.lane_change_refused = true;
    } else {
      host.maneuver_dir = requested_dir;
      host.maneuver_steps = 1;
      host.returning = false;
    }
  }
  if (host.maneuver_dir != 0 && host.maneuver_steps >= total) {
    host.lane_index += host.maneuver_dir;
    host.maneuver_dir = 0;
    host.maneuver_steps = 0;
    host.returning = false;
    out.info.lane_change_completed = true;
  } else if (host.maneuver_dir != 0 && host.maneuver_steps <= 0) {
    host.maneuver_dir = 0;
    host.maneuver_steps = 0;
    host.returning = false;
  }

  // Traffic keeps its cruise speed except when closing on the host from behind.
  const double host_y = host_lateral(next);
  for (auto& v : next.traffic) {
    v.speed = v.cruise_speed;
    const double dx = wrap_delta(host.position, v.position, config_.road_length);
    const double dy = std::abs(v.lane_index * config_.lane_width - host_y);
    if (dx < 0.0 && dy < config_.vehicle_width &&
        -dx - config_.vehicle_length < kTrafficFollowGap) {
      v.speed = std::min(v.cruise_speed, host.speed);
    }
  }

  const double dt = config_.step_seconds();
  std::vector<double> before;
  before.reserve(next.traffic.size());
  for (const auto& v : next.traffic) {
    before.push_back(wrap_delta(host.position, v.position, config_.road_length));
  }
  auto advance = [&](double pos, double speed_kmh) {
    double p = std::fmod(pos + speed_kmh * kKmhToMs * dt, config_.road_length);
    if (p < 0.0) p += config_.road_length;
    return p;
  };
  host.position = advance(host.position, host.speed);
  for (auto& v : next.traffic) v.position = advance(v.position, v.speed);

  for (std::size_t i = 0; i < next.traffic.size(); ++i) {
    const double after = wrap_delta(host.position, next.traffic[i].position, config_.road_length);
    if (before[i] > 0.0 && after <= 0.0 && before[i] < config_.road_length / 4) {
      ++out.info.overtakes_delta;
    }
  }

  out.info.collision = host_collides(next);
  next.step_index += 1;
  out.info.horizon_reached = next.step_index >= config_.episode_horizon;
  next.terminated = out.info.collision || out.info.horizon_reached;
  out.terminated = next.terminated;

  out.longitudinal_reward = host.speed / config_.host_speed_max;
  out.lateral_reward = maneuvering ? -1.0 : 0.0;

  const auto fresh = frame(next);
  const std::size_t fs = config_.frame_size();
  if (config_.frame_stack > 1) {
    std::copy_backward(next.frames.begin(), next.frames.end() - static_cast<std::ptrdiff_t>(fs),
                       next.frames.end());
  }
  std::copy(fresh.begin(), fresh.end(), next.frames.begin());
  out.observation = next.frames;
  return {std::move(next), std::move(out)};
}

}  // namespace rail::sim
