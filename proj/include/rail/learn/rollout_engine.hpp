#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rail/core/trajectory.hpp"

namespace rail::learn {

struct RolloutTask {
  int direction = 0;       // k
  int sign = 1;            // +1 or -1
  std::uint64_t seed = 0;  // environment seed of this episode
};

struct RolloutResult {
  int direction = 0;
  int sign = 1;
  Trajectory trajectory;
  double reward = 0.0;
};

// Fixed-size worker pool for rollout tasks. Tasks must only read immutable
// snapshots, so every worker count yields the same results. Results come back
// sorted by (direction, sign) with sign -1 first.
class RolloutEngine {
 public:
  using TaskFn = std::function<RolloutResult(const RolloutTask&)>;

  explicit RolloutEngine(std::size_t workers);

  std::size_t workers() const noexcept { return workers_; }

  // Throws DomainError on an empty or duplicated task list and EngineError
  // (carrying the failing task's (k, sign)) if any task throws; the remaining
  // queued tasks are skipped in that case.
  std::vector<RolloutResult> run(std::span<const RolloutTask> tasks, const TaskFn& fn) const;

 private:
  std::size_t workers_;
};

}  // namespace rail::learn
