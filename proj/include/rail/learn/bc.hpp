#pragma once

#include <cstddef>
#include <cstdint>

#include "rail/learn/demonstrations.hpp"
#include "rail/policy/policy.hpp"

namespace rail::learn {

struct BcOptions {
  policy::PolicyKind kind = policy::PolicyKind::kTwoLayer;
  std::size_t hidden = 10;
  int epochs = 1000;
  std::uint64_t seed = 0;
  double learning_rate = 1e-2;
  double weight_decay = 1e-4;  // L2 penalty coefficient on all weights
};

struct BcResult {
  policy::PolicyParams params;
  policy::RunningNormalizer normalizer;
  double final_loss = 0.0;
};

// Initial weights used by bc_train: zeros for linear policies, uniform Glorot
// for two-layer policies (a zero two-layer net has zero gradient).
policy::PolicyParams bc_initial_params(const BcOptions& options, std::size_t state_dim,
                                       std::size_t action_count);

// Fits the normalizer on every demonstration state, then minimizes the mean
// squared error between the policy logits and the one-hot expert action with
// full-batch Adam for options.epochs steps.
BcResult bc_train(const DemonstrationSet& demos, const BcOptions& options);

// Fraction of (state, action) pairs where the policy picks the expert action.
double action_agreement(const policy::PolicyParams& params,
                        const policy::RunningNormalizer& normalizer, const DemonstrationSet& demos);

}  // namespace rail::learn
