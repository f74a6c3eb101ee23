#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rail/core/rng.hpp"
#include "rail/disc/discriminator.hpp"
#include "rail/learn/rail_trainer.hpp"
#include "rail/policy/policy.hpp"

namespace rail::testing {

// Central finite differences of lsgan_loss with respect to every parameter.
inline Eigen::VectorXd finite_difference_grad(const disc::DiscriminatorParams& params,
                                              const disc::LabeledBatch& expert,
                                              const disc::LabeledBatch& policy, double h) {
  const Eigen::VectorXd theta = params.flatten();
  Eigen::VectorXd g(theta.size());
  disc::DiscriminatorParams probe = params;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd t = theta;
    t[i] = theta[i] + h;
    probe.assign(t);
    const double up = disc::lsgan_loss(probe, expert, policy);
    t[i] = theta[i] - h;
    probe.assign(t);
    const double down = disc::lsgan_loss(probe, expert, policy);
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

struct GradCheck {
  double max_rel = 0.0;  // worst component, |a - f| / max(|a|, |f|, floor)
  double vector_rel = 0.0;
};

inline GradCheck compare_gradients(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                                   double floor) {
  GradCheck out;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double f = numeric[i];
    const double rel = std::abs(a - f) / std::max({std::abs(a), std::abs(f), floor});
    out.max_rel = std::max(out.max_rel, rel);
  }
  out.vector_rel = (analytic - numeric).norm() /
                   std::max({analytic.norm(), numeric.norm(), floor});
  return out;
}

// A random (params, expert batch, policy batch) instance whose outputs stay
// away from the clamp, so the loss is smooth around the parameters.
struct GradInstance {
  disc::DiscriminatorParams params;
  disc::LabeledBatch expert;
  disc::LabeledBatch policy;
};

inline disc::LabeledBatch random_labeled_batch(Rng& rng, std::size_t rows, std::size_t n,
                                               std::size_t p, double label) {
  disc::LabeledBatch b;
  b.inputs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(n + p));
  b.labels = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(rows), label);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> s(n);
    for (auto& x : s) x = rng.normal();
    const int a = static_cast<int>(rng.below(p));
    b.inputs.row(static_cast<Eigen::Index>(r)) = disc::make_input(s, a, p).transpose();
  }
  return b;
}

inline GradInstance random_grad_instance(Rng& rng) {
  for (;;) {
    const std::size_t n = 2 + rng.below(10);
    const std::size_t p = 2 + rng.below(4);
    const std::size_t m = 1 + rng.below(16);
    GradInstance g;
    g.params = disc::DiscriminatorParams::glorot(n + p, m, rng);
    for (Eigen::Index i = 0; i < g.params.b1.size(); ++i) g.params.b1[i] = rng.uniform(-0.5, 0.5);
    g.params.b2 = rng.uniform(-0.5, 0.5);
    g.expert = random_labeled_batch(rng, 1 + rng.below(12), n, p, disc::kExpertLabel);
    g.policy = random_labeled_batch(rng, 1 + rng.below(12), n, p, disc::kPolicyLabel);
    const auto de = disc::disc_forward_batch(g.params, g.expert.inputs);
    const auto dp = disc::disc_forward_batch(g.params, g.policy.inputs);
    const double lo = std::min(de.minCoeff(), dp.minCoeff());
    const double hi = std::max(de.maxCoeff(), dp.maxCoeff());
    if (lo > 1e-3 && hi < 1.0 - 1e-3) return g;
  }
}

// theta_{t+1} = theta_t + alpha / (N sigma_R) * sum_k (r(theta + nu delta_k) - r(theta - nu delta_k)) delta_k
// computed entry by entry from flat parameter vectors.
inline std::vector<double> brute_force_update(const std::vector<double>& theta,
                                              const std::vector<std::vector<double>>& deltas,
                                              const std::vector<double>& r_plus,
                                              const std::vector<double>& r_minus, double alpha,
                                              double sigma_floor) {
  const std::size_t n = deltas.size();
  long double sum = 0.0L;
  for (std::size_t k = 0; k < n; ++k) sum += static_cast<long double>(r_plus[k]) + r_minus[k];
  const long double mean = sum / static_cast<long double>(2 * n);
  long double sq = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    sq += (r_plus[k] - mean) * (r_plus[k] - mean) + (r_minus[k] - mean) * (r_minus[k] - mean);
  }
  const double sigma = std::max(static_cast<double>(std::sqrt(sq / (2 * n))), sigma_floor);
  std::vector<double> out = theta;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < n; ++k) acc += (static_cast<long double>(r_plus[k]) - r_minus[k]) * deltas[k][j];
    out[j] = theta[j] + static_cast<double>(alpha / (static_cast<double>(n) * sigma) * acc);
  }
  return out;
}

// Layers flattened in order, row-major within each layer.
inline std::vector<double> flatten_layers(const std::vector<Eigen::MatrixXd>& layers) {
  std::vector<double> out;
  for (const auto& l : layers) {
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.cols(); ++j) out.push_back(l(i, j));
    }
  }
  return out;
}

// r(theta) = -||theta - theta*||^2 over the flattened policy weights.
class QuadraticObjective final : public learn::RolloutObjective {
 public:
  explicit QuadraticObjective(std::vector<double> target) : target_(std::move(target)) {}

  double value(const policy::PolicyParams& params) const {
    const auto flat = flatten_layers(params.layers);
    double s = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) s -= (flat[i] - target_[i]) * (flat[i] - target_[i]);
    return s;
  }

  learn::RolloutResult rollout(const learn::RolloutTask& task, const policy::PolicyParams& params,
                               const policy::RunningNormalizer&) const override {
    learn::RolloutResult r;
    r.direction = task.direction;
    r.sign = task.sign;
    r.reward = value(params);
    return r;
  }

  double update(std::span<const learn::RolloutResult>, int) override { return 0.0; }

  const std::vector<double>& target() const { return target_; }

 private:
  std::vector<double> target_;
};

}  // namespace rail::testing
