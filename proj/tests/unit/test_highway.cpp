#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "rail/core/error.hpp"
#include "rail/core/rng.hpp"
#include "rail/sim/highway.hpp"

using namespace rail;
using namespace rail::sim;

namespace {

HighwayConfig empty_road() {
  HighwayConfig c;
  c.traffic_density = 0.0;
  return c;
}

std::string config_error_field(const HighwayConfig& c) {
  try {
    c.validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_SUITE("highway") {
  TEST_CASE("invalid configs name the offending field") {
    struct Case {
      void (*mutate)(HighwayConfig&);
      const char* field;
    };
    const Case cases[] = {
        {[](HighwayConfig& c) { c.lane_count = 1; }, "lane_count"},
        {[](HighwayConfig& c) { c.lane_width = 0.0; }, "lane_width"},
        {[](HighwayConfig& c) { c.road_length = -5.0; }, "road_length"},
        {[](HighwayConfig& c) { c.ray_count = 7; }, "ray_count"},
        {[](HighwayConfig& c) { c.ray_count = 0; }, "ray_count"},
        {[](HighwayConfig& c) { c.max_range = 0.0; }, "max_range"},
        {[](HighwayConfig& c) { c.frame_stack = 0; }, "frame_stack"},
        {[](HighwayConfig& c) { c.decision_hz = 0.0; }, "decision_hz"},
        {[](HighwayConfig& c) { c.vel_acc = 0.0; }, "vel_acc"},
        {[](HighwayConfig& c) { c.vel_dec = -1.0; }, "vel_dec"},
        {[](HighwayConfig& c) { c.host_speed_min = -1.0; }, "host_speed_bounds"},
        {[](HighwayConfig& c) { c.host_speed_max = c.host_speed_min; }, "host_speed_bounds"},
        {[](HighwayConfig& c) { c.traffic_density = -1.0; }, "traffic_density"},
        {[](HighwayConfig& c) { c.traffic_speed_max = 10.0; }, "traffic_speed_bounds"},
        {[](HighwayConfig& c) { c.episode_horizon = 0; }, "episode_horizon"},
        {[](HighwayConfig& c) { c.vehicle_width = 4.0; }, "vehicle_width"},
        {[](HighwayConfig& c) { c.lane_change_seconds = 0.01; }, "lane_change_seconds"},
        {[](HighwayConfig& c) { c.min_headway = 1.0; }, "min_headway"},
        {[](HighwayConfig& c) { c.expert.gap_open = 1.0; }, "expert"},
    };
    CHECK(config_error_field(HighwayConfig{}).empty());
    for (const auto& k : cases) {
      HighwayConfig c;
      k.mutate(c);
      CHECK(config_error_field(c) == k.field);
      CHECK_THROWS_AS(Highway{c}, ConfigError);
    }
  }

  TEST_CASE("reset is deterministic and has the documented layout") {
    const Highway env{HighwayConfig{}};
    auto [s1, o1] = env.reset(7);
    auto [s2, o2] = env.reset(7);
    CHECK(o1 == o2);
    CHECK(s1 == s2);
    const std::size_t rays = 24, stack = 3;
    CHECK(o1.size() == stack * (rays + rays + 1));
    CHECK(o1.size() == 147);
    auto [s3, o3] = env.reset(8);
    CHECK(o1 != o3);
    CHECK(s1.host.lane_index == 2);
    CHECK(s1.host.speed == doctest::Approx(70.0));
    for (double v : o1) CHECK(std::isfinite(v));
  }

  TEST_CASE("an empty road reports no hits") {
    const Highway env{empty_road()};
    auto [s, o] = env.reset(7);
    const auto& c = env.config();
    for (int k = 0; k < c.frame_stack; ++k) {
      const std::size_t base = static_cast<std::size_t>(k) * c.frame_size();
      for (int i = 0; i < c.ray_count; ++i) {
        CHECK(o[base + static_cast<std::size_t>(i)] == 1.0);
        CHECK(o[base + static_cast<std::size_t>(c.ray_count + i)] == 0.0);
      }
      CHECK(o[base + c.frame_size() - 1] == doctest::Approx(0.7));
    }
  }

  TEST_CASE("spawned traffic respects lanes and headway") {
    const Highway env{HighwayConfig{}};
    const auto& c = env.config();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto [s, o] = env.reset(seed);
      CHECK(s.traffic.size() > 40);
      for (std::size_t i = 0; i < s.traffic.size(); ++i) {
        const auto& a = s.traffic[i];
        REQUIRE(a.lane_index >= 0);
        REQUIRE(a.lane_index < c.lane_count);
        REQUIRE(a.speed >= c.traffic_speed_min);
        REQUIRE(a.speed <= c.traffic_speed_max);
        for (std::size_t j = i + 1; j < s.traffic.size(); ++j) {
          const auto& b = s.traffic[j];
          if (a.lane_index != b.lane_index) continue;
          REQUIRE(std::abs(wrap_delta(a.position, b.position, c.road_length)) >= c.min_headway);
        }
      }
    }
  }

  TEST_CASE("random driving keeps the state invariants") {
    const Highway env{HighwayConfig{}};
    const auto& c = env.config();
    Rng pick(99);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto [s, o] = env.reset(seed);
      while (!s.terminated) {
        const auto a = action_from_id(static_cast<int>(pick.below(5)));
        auto [n, out] = env.step(s, a);
        REQUIRE(n.host.speed >= c.host_speed_min);
        REQUIRE(n.host.speed <= c.host_speed_max);
        REQUIRE(n.host.lane_index >= 0);
        REQUIRE(n.host.lane_index < c.lane_count);
        REQUIRE(out.observation.size() == c.observation_size());
        for (double v : out.observation) REQUIRE(std::isfinite(v));
        for (int i = 0; i < c.ray_count; ++i) {
          REQUIRE(out.observation[static_cast<std::size_t>(i)] >= 0.0);
          REQUIRE(out.observation[static_cast<std::size_t>(i)] <= 1.0);
        }
        // Penalized exactly while a maneuver is under way or an attempt is refused.
        const bool in_progress = s.host.maneuver_dir != 0 || n.host.maneuver_dir != 0 ||
                                 out.info.lane_change_completed || out.info.lane_change_refused;
        REQUIRE((out.lateral_reward < 0.0) == in_progress);
        REQUIRE(out.lateral_reward <= 0.0);
        // Frames shift by one per step, newest first.
        REQUIRE(std::equal(o.begin(), o.end() - static_cast<std::ptrdiff_t>(c.frame_size()),
                           out.observation.begin() + static_cast<std::ptrdiff_t>(c.frame_size())));
        s = n;
        o = out.observation;
      }
    }
  }

  TEST_CASE("longitudinal reward increases with speed") {
    const Highway env{empty_road()};
    double last = -1.0;
    auto [s, o] = env.reset(1);
    s.host.speed = env.config().host_speed_min;
    for (int i = 0; i < 12; ++i) {
      auto [n, out] = env.step(s, DrivingAction::kAccelerate);
      if (n.host.speed > s.host.speed) CHECK(out.longitudinal_reward > last);
      last = out.longitudinal_reward;
      s = n;
    }
    CHECK(s.host.speed == env.config().host_speed_max);
  }

  TEST_CASE("hand-stepped left lane change") {
    const Highway env{empty_road()};
    HostVehicle host;
    host.lane_index = 2;
    host.speed = 80.0;
    auto s = env.make_state(host, {});
    CHECK(env.host_lateral(s) == doctest::Approx(7.0));
    const double expected_y[] = {6.3, 5.6, 4.9, 4.2, 3.5};
    for (int k = 0; k < 5; ++k) {
      const auto a = k == 0 ? DrivingAction::kLaneLeft : DrivingAction::kMaintain;
      auto [n, out] = env.step(s, a);
      CHECK(out.lateral_reward == -1.0);
      CHECK(env.host_lateral(n) == doctest::Approx(expected_y[k]));
      CHECK(out.info.lane_change_completed == (k == 4));
      if (k < 4) {
        CHECK(n.lane_change_progress(env.config()).value() == doctest::Approx((k + 1) / 5.0));
      }
      s = n;
    }
    CHECK(s.host.lane_index == 1);
    CHECK_FALSE(s.lane_change_progress(env.config()).has_value());
    auto [n, out] = env.step(s, DrivingAction::kMaintain);
    CHECK(out.lateral_reward == 0.0);
    CHECK(n.host.lane_index == 1);
  }

  TEST_CASE("repeating the lateral command continues the maneuver") {
    const Highway env{empty_road()};
    HostVehicle host;
    host.lane_index = 2;
    host.speed = 80.0;
    auto s = env.make_state(host, {});
    for (int k = 0; k < 5; ++k) s = env.step(s, DrivingAction::kLaneRight).first;
    CHECK(s.host.lane_index == 3);
    CHECK(s.host.maneuver_dir == 0);
  }

  TEST_CASE("opposite command aborts and returns to the origin lane") {
    const Highway env{empty_road()};
    HostVehicle host;
    host.lane_index = 2;
    host.speed = 80.0;
    auto s = env.make_state(host, {});
    s = env.step(s, DrivingAction::kLaneLeft).first;
    s = env.step(s, DrivingAction::kLaneLeft).first;
    CHECK(env.host_lateral(s) == doctest::Approx(5.6));
    auto [n1, o1] = env.step(s, DrivingAction::kLaneRight);
    CHECK(env.host_lateral(n1) == doctest::Approx(6.3));
    CHECK(o1.lateral_reward == -1.0);
    auto [n2, o2] = env.step(n1, DrivingAction::kMaintain);
    CHECK(env.host_lateral(n2) == doctest::Approx(7.0));
    CHECK(n2.host.lane_index == 2);
    CHECK(n2.host.maneuver_dir == 0);
    CHECK_FALSE(o2.info.lane_change_completed);
    CHECK(env.step(n2, DrivingAction::kMaintain).second.lateral_reward == 0.0);
  }

  TEST_CASE("lane change off the road is refused with a penalty step") {
    const Highway env{empty_road()};
    HostVehicle host;
    host.lane_index = 0;
    host.speed = 80.0;
    auto [n, out] = env.step(env.make_state(host, {}), DrivingAction::kLaneLeft);
    CHECK(out.info.lane_change_refused);
    CHECK_FALSE(out.terminated);
    CHECK(out.lateral_reward < 0.0);
    CHECK(n.host.lane_index == 0);
    CHECK(n.host.maneuver_dir == 0);
    // The next two steps are ordinary.
    auto [n2, o2] = env.step(n, DrivingAction::kMaintain);
    CHECK(o2.lateral_reward == 0.0);
    auto [n3, o3] = env.step(n2, DrivingAction::kLaneRight);
    CHECK(o3.lateral_reward < 0.0);
    CHECK(n3.host.maneuver_dir == 1);
  }

  TEST_CASE("collision with a slow leader terminates the episode") {
    const Highway env{empty_road()};
    HostVehicle host;
    host.lane_index = 1;
    host.position = 100.0;
    host.speed = 100.0;
    TrafficVehicle v{1, 106.0, 40.0, 40.0};
    auto s = env.make_state(host, {v});
    auto [n, out] = env.step(s, DrivingAction::kMaintain);
    CHECK(out.info.collision);
    CHECK(out.terminated);
    CHECK_THROWS_AS(env.step(n, DrivingAction::kMaintain), StateError);
  }

  TEST_CASE("horizon ends the episode") {
    HighwayConfig c = empty_road();
    c.episode_horizon = 3;
    const Highway env{c};
    auto [s, o] = env.reset(0);
    for (int k = 0; k < 3; ++k) {
      REQUIRE_FALSE(s.terminated);
      auto [n, out] = env.step(s, DrivingAction::kMaintain);
      CHECK(out.info.horizon_reached == (k == 2));
      s = n;
    }
    CHECK(s.terminated);
    CHECK(s.step_index == 3);
  }

  TEST_CASE("overtakes match an unwrapped recount") {
    const Highway env{HighwayConfig{}};
    const auto& c = env.config();
    Rng pick(5);
    int total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto [s, o] = env.reset(seed);
      std::vector<double> rel;
      for (const auto& v : s.traffic) rel.push_back(wrap_delta(s.host.position, v.position, c.road_length));
      int counted = 0;
      int recount = 0;
      while (!s.terminated) {
        const auto a = pick.below(3) == 0 ? DrivingAction::kDecelerate : DrivingAction::kAccelerate;
        auto [n, out] = env.step(s, a);
        counted += out.info.overtakes_delta;
        const double dt = c.step_seconds();
        const double host_move = n.host.speed / 3.6 * dt;
        for (std::size_t i = 0; i < rel.size(); ++i) {
          const double next = rel[i] + n.traffic[i].speed / 3.6 * dt - host_move;
          if (rel[i] > 0.0 && next <= 0.0) ++recount;
          rel[i] = next;
        }
        s = n;
      }
      CHECK(counted == recount);
      total += counted;
    }
    CHECK(total > 0);
  }

  TEST_CASE("action ids are validated") {
    CHECK(action_from_id(4) == DrivingAction::kLaneRight);
    CHECK_THROWS_AS(action_from_id(5), DomainError);
    CHECK_THROWS_AS(action_from_id(-1), DomainError);
  }

  TEST_CASE("wrap_delta picks the short way around") {
    CHECK(wrap_delta(10.0, 20.0, 100.0) == doctest::Approx(10.0));
    CHECK(wrap_delta(95.0, 5.0, 100.0) == doctest::Approx(10.0));
    CHECK(wrap_delta(5.0, 95.0, 100.0) == doctest::Approx(-10.0));
    CHECK(wrap_delta(0.0, 50.0, 100.0) == doctest::Approx(-50.0));
  }
}
