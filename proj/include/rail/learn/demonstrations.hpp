#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rail/core/trajectory.hpp"
#include "rail/sim/evaluate.hpp"

namespace rail::learn {

struct DemonstrationSet {
  std::vector<Trajectory> episodes;
  std::size_t state_dim = 0;
  std::size_t action_count = sim::kActionCount;
  std::string source = "scripted_expert";
  std::string config_digest;

  std::size_t total_steps() const;
  // Throws DomainError unless every episode is non-empty with states of width
  // state_dim and action ids below action_count, and there is at least one.
  void validate() const;
};

// Records `episodes` collision-free expert episodes. Episode i is drawn from
// sub-seeds derive_seed({seed, j}) for j = 0, 1, ...; an episode that ends in a
// collision is dropped and the next sub-seed is used instead.
DemonstrationSet record_demonstrations(const sim::Highway& env, int episodes, std::uint64_t seed,
                                       const sim::DrivingPolicy& expert);
DemonstrationSet record_demonstrations(const sim::Highway& env, int episodes, std::uint64_t seed);

}  // namespace rail::learn
