#include "rail/learn/rail_trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "rail/core/digest.hpp"
#include "rail/core/error.hpp"

namespace rail::learn {

using policy::NoiseDirection;
using policy::PolicyParams;

void RailConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(field, what);
  };
  require(std::isfinite(step_size) && step_size > 0.0, "step_size", "must be > 0");
  require(directions >= 1, "directions", "must be >= 1");
  require(std::isfinite(nu_init) && nu_init > 0.0, "nu_init", "must be > 0");
  require(std::isfinite(noise_increment) && noise_increment >= 0.0, "noise_increment",
          "must be >= 0");
  require(eval_period >= 1, "eval_period", "must be >= 1");
  require(iterations >= 0, "iterations", "must be >= 0");
  require(workers >= 1, "workers", "must be >= 1");
  require(std::isfinite(sigma_floor) && sigma_floor > 0.0, "sigma_floor", "must be > 0");
}

std::string metrics_row(const IterationReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f", r.iteration,
                r.mean_reward, r.max_reward, r.sigma_r, r.disc_loss, r.nu, r.seconds);
  return buf;
}

std::string metrics_digest(std::span<const IterationReport> reports) {
  Fnv1a h;
  for (auto r : reports) {
    r.seconds = 0.0;
    h.update(metrics_row(r));
    h.update("\n");
  }
  return h.hex();
}

double reward_std(std::span<const double> rewards) {
  if (rewards.empty()) return 0.0;
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  return std::sqrt(ss / static_cast<double>(rewards.size()));
}

PolicyParams compute_update(const PolicyParams& theta, std::span<const NoiseDirection> directions,
                            std::span<const RolloutResult> results, double step_size,
                            double sigma_floor) {
  const std::size_t n = directions.size();
  if (n == 0) throw DomainError("compute_update needs at least one direction");
  std::vector<double> plus(n), minus(n);
  std::vector<char> seen_plus(n, 0), seen_minus(n, 0);
  std::vector<double> all;
  all.reserve(results.size());
  for (const auto& r : results) {
    if (r.direction < 0 || static_cast<std::size_t>(r.direction) >= n) {
      throw DomainError("rollout result for unknown direction " + std::to_string(r.direction));
    }
    const auto k = static_cast<std::size_t>(r.direction);
    auto& seen = r.sign > 0 ? seen_plus[k] : seen_minus[k];
    if (seen) throw DomainError("duplicate rollout result (k=" + std::to_string(k) + ")");
    seen = 1;
    (r.sign > 0 ? plus : minus)[k] = r.reward;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!seen_plus[k] || !seen_minus[k]) {
      throw DomainError("missing rollout result for direction " + std::to_string(k) +
                        (seen_plus[k] ? " (sign -)" : " (sign +)"));
    }
    all.push_back(plus[k]);
    all.push_back(minus[k]);
  }
  const double sigma = std::max(reward_std(all), sigma_floor);
  const double scale = step_size / (static_cast<double>(n) * sigma);

  PolicyParams next = theta;
  for (std::size_t i = 0; i < next.layers.size(); ++i) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(theta.layers[i].rows(), theta.layers[i].cols());
    for (std::size_t k = 0; k < n; ++k) {
      if (directions[k].layers.size() != theta.layers.size() ||
          directions[k].layers[i].rows() != sum.rows() ||
          directions[k].layers[i].cols() != sum.cols()) {
        throw DomainError("direction " + std::to_string(k) + " does not match the policy shape");
      }
      sum += (plus[k] - minus[k]) * directions[k].layers[i];
    }
    next.layers[i] += scale * sum;
  }
  return next;
}

std::uint64_t rollout_seed(std::uint64_t run_seed, int iteration, int direction) {
  return derive_seed({run_seed, 0x726f6c6cULL, static_cast<std::uint64_t>(iteration),
                      static_cast<std::uint64_t>(direction)});
}

RailTrainer::RailTrainer(RailConfig config, RolloutObjective& objective, RailState initial)
    : config_(config),
      objective_(objective),
      state_(std::move(initial)),
      engine_(static_cast<std::size_t>(std::max(1, config.workers))) {
  config_.validate();
  if (state_.theta.layers.empty()) throw DomainError("initial policy has no layers");
  if (state_.normalizer.dim() != state_.theta.state_dim()) {
    throw DomainError("normalizer dimension does not match the policy input");
  }
}

IterationReport RailTrainer::step() {
  const auto started = std::chrono::steady_clock::now();
  const int t = state_.iteration + 1;
  const double nu = state_.schedule.nu;

  Rng direction_rng(derive_seed({config_.seed, 0x64697273ULL, static_cast<std::uint64_t>(t)}));
  const auto n = static_cast<std::size_t>(config_.directions);
  const std::vector<NoiseDirection> directions =
      policy::sample_directions(direction_rng, n, state_.theta);

  std::vector<RolloutTask> tasks;
  tasks.reserve(2 * n);
  for (int k = 0; k < config_.directions; ++k) {
    const std::uint64_t seed = rollout_seed(config_.seed, t, k);
    tasks.push_back({k, -1, seed});
    tasks.push_back({k, 1, seed});
  }

  const PolicyParams& theta = state_.theta;
  const policy::RunningNormalizer& normalizer = state_.normalizer;
  std::vector<RolloutResult> results =
      engine_.run(tasks, [&](const RolloutTask& task) {
        const PolicyParams perturbed = policy::perturb(
            theta, directions[static_cast<std::size_t>(task.direction)], nu, task.sign);
        return objective_.rollout(task, perturbed, normalizer);
      });

  IterationReport report;
  report.iteration = t;
  report.nu = nu;
  std::vector<double> rewards;
  rewards.reserve(results.size());
  for (const auto& r : results) {
    if (!std::isfinite(r.reward)) {
      const std::string reason = "non-finite reward at iteration " + std::to_string(t) +
                                 " (k=" + std::to_string(r.direction) +
                                 ", sign=" + (r.sign > 0 ? "+" : "-") + ")";
      if (halt_) halt_(state_, reason);
      throw NumericalError(reason);
    }
    rewards.push_back(r.reward);
  }
  report.mean_reward = 0.0;
  for (double r : rewards) report.mean_reward += r;
  report.mean_reward /= static_cast<double>(rewards.size());
  report.max_reward = *std::max_element(rewards.begin(), rewards.end());
  report.sigma_r = reward_std(rewards);

  report.disc_loss = objective_.update(results, t);

  PolicyParams next =
      compute_update(theta, directions, results, config_.step_size, config_.sigma_floor);
  if (!next.all_finite()) {
    const std::string reason = "non-finite policy weights at iteration " + std::to_string(t);
    if (halt_) halt_(state_, reason);
    throw NumericalError(reason);
  }
  state_.theta = std::move(next);
  for (const auto& r : results) {
    if (!r.trajectory.empty()) state_.normalizer.update(r.trajectory.states);
  }
  state_.schedule = state_.schedule.step(t, report.mean_reward);
  state_.iteration = t;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::vector<IterationReport> RailTrainer::run(
    const std::function<void(const IterationReport&, const RailState&)>& on_iteration) {
  std::vector<IterationReport> reports;
  while (state_.iteration < config_.iterations) {
    reports.push_back(step());
    if (on_iteration) on_iteration(reports.back(), state_);
  }
  return reports;
}

}  // namespace rail::learn
