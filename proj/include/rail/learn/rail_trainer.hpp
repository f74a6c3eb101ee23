#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rail/learn/rollout_engine.hpp"
#include "rail/policy/noise_schedule.hpp"
#include "rail/policy/policy.hpp"

namespace rail::learn {

struct RailConfig {
  double step_size = 0.001;      // alpha
  int directions = 512;          // N
  double nu_init = 0.03;
  double noise_increment = 0.001;  // tau
  int eval_period = 10;          // eta
  int iterations = 100;          // T
  int workers = 1;               // W
  std::uint64_t seed = 0;
  double sigma_floor = 1e-8;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
  bool operator==(const RailConfig&) const = default;
};

struct IterationReport {
  int iteration = 0;
  double mean_reward = 0.0;
  double max_reward = 0.0;
  double sigma_r = 0.0;
  double disc_loss = 0.0;
  double nu = 0.0;  // noise used for this iteration's rollouts
  double seconds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "iter,mean_reward,max_reward,sigma_r,disc_loss,nu,seconds";
std::string metrics_row(const IterationReport& report);
// Digest of a report stream that ignores wall-clock time.
std::string metrics_digest(std::span<const IterationReport> reports);

// Population standard deviation.
double reward_std(std::span<const double> rewards);

// theta + alpha / (N * max(sigma_R, sigma_floor)) * sum_k (r_k+ - r_k-) delta_k,
// where sigma_R is the population std of all 2N rewards. Results may come in
// any order but must hold every (k, +1) and (k, -1) for k < N exactly once.
policy::PolicyParams compute_update(const policy::PolicyParams& theta,
                                    std::span<const policy::NoiseDirection> directions,
                                    std::span<const RolloutResult> results, double step_size,
                                    double sigma_floor);

// What the coordinator optimizes against. rollout() is called concurrently
// and must only read state; update() runs on the coordinator between rounds.
class RolloutObjective {
 public:
  virtual ~RolloutObjective() = default;

  virtual RolloutResult rollout(const RolloutTask& task, const policy::PolicyParams& params,
                                const policy::RunningNormalizer& normalizer) const = 0;

  // Adversary update on this iteration's rollouts; returns its loss.
  virtual double update(std::span<const RolloutResult> results, int iteration) = 0;
};

struct RailState {
  policy::PolicyParams theta;
  policy::RunningNormalizer normalizer;
  policy::NoiseSchedule schedule;
  int iteration = 0;  // completed iterations
};

// Seed shared by the (k, +) and (k, -) rollouts of an iteration.
std::uint64_t rollout_seed(std::uint64_t run_seed, int iteration, int direction);

// Coordinator of the random-search loop. One step():
//   1. draws N directions from a stream seeded by (seed, iteration)
//   2. runs the 2N perturbed rollouts on the worker pool
//   3. updates the adversary
//   4. applies compute_update
//   5. folds every visited state into the normalizer, in (k, sign, t) order
//   6. advances the noise schedule with the mean rollout reward
class RailTrainer {
 public:
  using HaltHandler = std::function<void(const RailState&, const std::string& reason)>;

  RailTrainer(RailConfig config, RolloutObjective& objective, RailState initial);

  const RailConfig& config() const noexcept { return config_; }
  const RailState& state() const noexcept { return state_; }

  // Called with the pre-iteration state before a NumericalError is thrown.
  void on_halt(HaltHandler handler) { halt_ = std::move(handler); }

  IterationReport step();
  // Runs until config.iterations iterations have completed.
  std::vector<IterationReport> run(
      const std::function<void(const IterationReport&, const RailState&)>& on_iteration = {});

 private:
  RailConfig config_;
  RolloutObjective& objective_;
  RailState state_;
  RolloutEngine engine_;
  HaltHandler halt_;
};

}  // namespace rail::learn
