#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include <Eigen/Dense>

#include "rail/core/rng.hpp"
#include "rail/core/trajectory.hpp"

namespace rail::disc {

// D(s, a) = clamp(sigmoid(w2 . tanh(W1 [s ; onehot(a)] + b1) + b2), eps, 1 - eps)
struct DiscriminatorParams {
  Eigen::MatrixXd w1;  // m x (n + p)
  Eigen::VectorXd b1;  // m
  Eigen::VectorXd w2;  // m
  double b2 = 0.0;

  static DiscriminatorParams zeros(std::size_t input_dim, std::size_t hidden);
  // Uniform Glorot initialization of both weight layers, zero biases.
  static DiscriminatorParams glorot(std::size_t input_dim, std::size_t hidden, Rng& rng);

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t parameter_count() const;
  bool all_finite() const;
  bool same_shape(const DiscriminatorParams& other) const;

  // Flat view helpers: w1 (column-major), b1, w2, b2.
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);

  bool operator==(const DiscriminatorParams& other) const;
};

inline constexpr double kOutputClamp = 1e-6;
inline constexpr double kExpertLabel = 1.0;  // b
inline constexpr double kPolicyLabel = 0.0;  // a
inline constexpr std::size_t kDefaultHidden = 64;

// Rows are [state ; onehot(action)].
struct LabeledBatch {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd labels;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

// Writes [state ; onehot(action)] of width state.size() + action_count.
Eigen::VectorXd make_input(std::span<const double> state, int action, std::size_t action_count);

// Output for a single (s, a); throws DomainError on dimension mismatch.
double disc_forward(const DiscriminatorParams& params, std::span<const double> state, int action);
// Outputs for every row of a batch.
Eigen::VectorXd disc_forward_batch(const DiscriminatorParams& params,
                                   const Eigen::MatrixXd& inputs);

// 1/2 mean_expert (D - label)^2 + 1/2 mean_policy (D - label)^2
double lsgan_loss(const DiscriminatorParams& params, const LabeledBatch& expert,
                  const LabeledBatch& policy);

// Exact gradient of lsgan_loss; the clamp has zero derivative where it binds.
DiscriminatorParams disc_grad(const DiscriminatorParams& params, const LabeledBatch& expert,
                              const LabeledBatch& policy);

struct AdamState {
  DiscriminatorParams m;
  DiscriminatorParams v;
  long long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const DiscriminatorParams& params, double learning_rate = 1e-3);
};

// One adaptive-moment step on lsgan_loss.
std::pair<DiscriminatorParams, AdamState> disc_update(const DiscriminatorParams& params,
                                                      const AdamState& opt,
                                                      const LabeledBatch& expert,
                                                      const LabeledBatch& policy);

// log D - log(1 - D) of the clamped output.
double reward_signal(const DiscriminatorParams& params, std::span<const double> state, int action);

// Undiscounted sum of reward_signal over the trajectory; DomainError if empty.
double trajectory_reward(const DiscriminatorParams& params, const Trajectory& trajectory);

}  // namespace rail::disc
