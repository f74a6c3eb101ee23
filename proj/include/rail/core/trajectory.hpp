#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rail {

struct StepMetrics {
  double speed = 0.0;  // km/h after the step
  double longitudinal = 0.0;
  double lateral = 0.0;
  int overtakes = 0;
  bool lane_change_completed = false;
  bool collision = false;
};

// Ordered (state, action) pairs of one episode. States are stored row-major in
// a single buffer of size() * state_dim doubles.
struct Trajectory {
  std::size_t state_dim = 0;
  std::vector<double> states;
  std::vector<std::uint8_t> actions;
  std::vector<StepMetrics> metrics;  // empty when not recorded

  std::size_t size() const noexcept { return actions.size(); }
  bool empty() const noexcept { return actions.empty(); }
  std::span<const double> state(std::size_t t) const {
    return {states.data() + t * state_dim, state_dim};
  }
  void push(std::span<const double> s, std::uint8_t action) {
    states.insert(states.end(), s.begin(), s.end());
    actions.push_back(action);
  }
  bool ended_in_collision() const { return !metrics.empty() && metrics.back().collision; }
};

}  // namespace rail
