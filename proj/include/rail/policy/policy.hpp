#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rail/core/rng.hpp"
#include "rail/policy/normalizer.hpp"

namespace rail::policy {

enum class PolicyKind { kLinear, kTwoLayer };

std::string to_string(PolicyKind kind);
// Accepts "linear" and "two_layer"; throws DomainError otherwise.
PolicyKind parse_policy_kind(const std::string& text);

// Weight matrices of a deterministic policy.
//   linear:    layers = { theta (p x n) }
//   two_layer: layers = { theta_in (h x n), theta_out (p x h) }
// logits = theta * s  or  theta_out * tanh(theta_in * s); no biases.
struct PolicyParams {
  PolicyKind kind = PolicyKind::kLinear;
  std::vector<Eigen::MatrixXd> layers;

  static PolicyParams zeros(PolicyKind kind, std::size_t n, std::size_t h, std::size_t p);

  std::size_t state_dim() const { return static_cast<std::size_t>(layers.front().cols()); }
  std::size_t action_dim() const { return static_cast<std::size_t>(layers.back().rows()); }
  // 0 for linear policies.
  std::size_t hidden_dim() const {
    return kind == PolicyKind::kTwoLayer ? static_cast<std::size_t>(layers.front().rows()) : 0;
  }
  std::size_t parameter_count() const;
  bool all_finite() const;
  bool same_shape(const PolicyParams& other) const;

  bool operator==(const PolicyParams& other) const;
};

// Gaussian search direction, shaped like the PolicyParams it perturbs.
struct NoiseDirection {
  std::vector<Eigen::MatrixXd> layers;
};

// Whitens `state` with the frozen normalizer and returns the p logits.
Eigen::VectorXd policy_logits(const PolicyParams& params, const RunningNormalizer& normalizer,
                              std::span<const double> state);

// argmax of the logits; ties go to the lowest action id.
int policy_act(const PolicyParams& params, const RunningNormalizer& normalizer,
               std::span<const double> state);
int argmax_lowest(const Eigen::VectorXd& logits);

// theta + sign * nu * delta. sign must be +1 or -1.
PolicyParams perturb(const PolicyParams& params, const NoiseDirection& delta, double nu, int sign);

// count i.i.d. standard-normal directions drawn from rng in layer order,
// row-major within each layer.
std::vector<NoiseDirection> sample_directions(Rng& rng, std::size_t count,
                                              const PolicyParams& shape_of);

}  // namespace rail::policy
