#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rail/disc/discriminator.hpp"
#include "rail/learn/demonstrations.hpp"
#include "rail/learn/rail_trainer.hpp"
#include "rail/sim/highway.hpp"

namespace rail::learn {

struct DiscriminatorTraining {
  std::size_t hidden = disc::kDefaultHidden;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;  // half expert, half policy
};

// Highway rollouts scored by the discriminator. Each iteration the
// discriminator makes one pass over that iteration's rollout pairs, shuffled,
// in minibatches of batch_size/2 policy pairs plus as many expert pairs drawn
// uniformly with replacement from the demonstrations.
class HighwayImitation final : public RolloutObjective {
 public:
  HighwayImitation(const sim::Highway& env, const DemonstrationSet& demos,
                   disc::DiscriminatorParams initial, DiscriminatorTraining training,
                   std::uint64_t seed);

  RolloutResult rollout(const RolloutTask& task, const policy::PolicyParams& params,
                        const policy::RunningNormalizer& normalizer) const override;
  double update(std::span<const RolloutResult> results, int iteration) override;

  const disc::DiscriminatorParams& discriminator() const noexcept { return disc_; }
  const disc::AdamState& optimizer() const noexcept { return opt_; }
  void restore(disc::DiscriminatorParams params, disc::AdamState opt);

 private:
  const sim::Highway& env_;
  Eigen::MatrixXd expert_inputs_;  // every demonstration pair, [s ; onehot(a)]
  disc::DiscriminatorParams disc_;
  disc::AdamState opt_;
  DiscriminatorTraining training_;
  std::uint64_t seed_;
};

// Runs one episode of the deterministic policy from reset(seed).
Trajectory policy_rollout(const sim::Highway& env, const policy::PolicyParams& params,
                          const policy::RunningNormalizer& normalizer, std::uint64_t seed);

sim::DrivingPolicy as_driving_policy(const policy::PolicyParams& params,
                                     const policy::RunningNormalizer& normalizer);

struct PolicySpec {
  policy::PolicyKind kind = policy::PolicyKind::kTwoLayer;
  std::size_t hidden = 10;
};

struct PolicyInit {
  policy::PolicyParams params;
  policy::RunningNormalizer normalizer;
};

struct RailOutcome {
  policy::PolicyParams theta;
  policy::RunningNormalizer normalizer;
  disc::DiscriminatorParams discriminator;
  std::vector<IterationReport> reports;
};

disc::DiscriminatorParams initial_discriminator(std::size_t state_dim, std::size_t action_count,
                                                std::size_t hidden, std::uint64_t seed);

// Full training run. Without `init` the policy starts from zeros of `spec`
// with an empty normalizer; with it (e.g. behavior-cloned weights) training
// starts from the given parameters and normalizer.
RailOutcome rail_train(const sim::HighwayConfig& env_config, const DemonstrationSet& demos,
                       const RailConfig& rail, const PolicySpec& spec,
                       const std::optional<PolicyInit>& init = std::nullopt,
                       const DiscriminatorTraining& training = {});

}  // namespace rail::learn
