#include "rail/learn/demonstrations.hpp"

#include <string>

#include "rail/core/error.hpp"

namespace rail::learn {

std::size_t DemonstrationSet::total_steps() const {
  std::size_t total = 0;
  for (const auto& e : episodes) total += e.size();
  return total;
}

void DemonstrationSet::validate() const {
  if (episodes.empty()) throw DomainError("demonstration set has no episodes");
  if (state_dim == 0 || action_count == 0) throw DomainError("demonstration dims must be positive");
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    if (e.empty()) throw DomainError("demonstration episode " + std::to_string(i) + " is empty");
    if (e.state_dim != state_dim || e.states.size() != e.size() * state_dim) {
      throw DomainError("demonstration episode " + std::to_string(i) + " has the wrong state width");
    }
    for (auto a : e.actions) {
      if (a >= action_count) {
        throw DomainError("demonstration episode " + std::to_string(i) + " has action id " +
                          std::to_string(a) + " >= " + std::to_string(action_count));
      }
    }
  }
}

DemonstrationSet record_demonstrations(const sim::Highway& env, int episodes, std::uint64_t seed,
                                       const sim::DrivingPolicy& expert) {
  if (episodes < 1) throw DomainError("record_demonstrations needs at least one episode");
  DemonstrationSet set;
  set.state_dim = env.observation_size();
  const std::uint64_t max_attempts = 100ULL * static_cast<std::uint64_t>(episodes);
  std::uint64_t sub = 0;
  while (set.episodes.size() < static_cast<std::size_t>(episodes)) {
    if (sub >= max_attempts) {
      throw Error("expert collided in too many episodes (" + std::to_string(sub) + " attempts)");
    }
    Trajectory t;
    sim::run_episode(env, expert, derive_seed({seed, sub++}), &t);
    if (t.ended_in_collision()) continue;
    set.episodes.push_back(std::move(t));
  }
  return set;
}

DemonstrationSet record_demonstrations(const sim::Highway& env, int episodes, std::uint64_t seed) {
  return record_demonstrations(env, episodes, seed, sim::expert_policy(env.config()));
}

}  // namespace rail::learn
