#include "rail/learn/rollout_engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>

#include "rail/core/error.hpp"

namespace rail::learn {

RolloutEngine::RolloutEngine(std::size_t workers) : workers_(workers) {
  if (workers_ == 0) throw DomainError("rollout engine needs at least one worker");
}

std::vector<RolloutResult> RolloutEngine::run(std::span<const RolloutTask> tasks,
                                              const TaskFn& fn) const {
  if (tasks.empty()) throw DomainError("rollout engine received no tasks");
  std::set<std::pair<int, int>> keys;
  for (const auto& t : tasks) {
    if (t.sign != 1 && t.sign != -1) throw DomainError("rollout task sign must be +1 or -1");
    if (!keys.emplace(t.direction, t.sign).second) {
      throw DomainError("duplicate rollout task (k=" + std::to_string(t.direction) + ")");
    }
  }

  std::vector<std::optional<RolloutResult>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> cancelled{false};
  std::mutex failure_mutex;
  std::optional<EngineError> failure;

  auto work = [&] {
    for (;;) {
      if (cancelled.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= tasks.size()) return;
      try {
        RolloutResult r = fn(tasks[i]);
        r.direction = tasks[i].direction;
        r.sign = tasks[i].sign;
        slots[i] = std::move(r);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure.emplace(tasks[i].direction, tasks[i].sign, e.what());
        cancelled = true;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure.emplace(tasks[i].direction, tasks[i].sign, "unknown exception");
        cancelled = true;
      }
    }
  };

  const std::size_t threads = std::min(workers_, tasks.size());
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t w = 1; w < threads; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) throw *failure;

  std::vector<RolloutResult> results;
  results.reserve(slots.size());
  for (auto& s : slots) results.push_back(std::move(*s));
  std::sort(results.begin(), results.end(), [](const RolloutResult& a, const RolloutResult& b) {
    return std::pair(a.direction, a.sign) < std::pair(b.direction, b.sign);
  });
  return results;
}

}  // namespace rail::learn
