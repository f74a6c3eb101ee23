#include "rail/learn/imitation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "rail/core/error.hpp"

namespace rail::learn {

Trajectory policy_rollout(const sim::Highway& env, const policy::PolicyParams& params,
                          const policy::RunningNormalizer& normalizer, std::uint64_t seed) {
  Trajectory t;
  sim::run_episode(env, as_driving_policy(params, normalizer), seed, &t);
  return t;
}

sim::DrivingPolicy as_driving_policy(const policy::PolicyParams& params,
                                     const policy::RunningNormalizer& normalizer) {
  return [&params, &normalizer](const sim::Observation& obs, const sim::HighwayState&) {
    return sim::action_from_id(policy::policy_act(params, normalizer, obs));
  };
}

HighwayImitation::HighwayImitation(const sim::Highway& env, const DemonstrationSet& demos,
                                   disc::DiscriminatorParams initial,
                                   DiscriminatorTraining training, std::uint64_t seed)
    : env_(env), disc_(std::move(initial)), training_(training), seed_(seed) {
  demos.validate();
  if (demos.state_dim != env.observation_size()) {
    throw DomainError("demonstrations have state width " + std::to_string(demos.state_dim) +
                      " but the environment observes " + std::to_string(env.observation_size()));
  }
  if (disc_.input_dim() != demos.state_dim + demos.action_count) {
    throw DomainError("discriminator input width does not match state + action width");
  }
  if (training_.batch_size < 2) throw DomainError("discriminator batch size must be >= 2");
  opt_ = disc::AdamState::for_params(disc_, training_.learning_rate);

  expert_inputs_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(demos.total_steps()),
                                         static_cast<Eigen::Index>(disc_.input_dim()));
  Eigen::Index row = 0;
  for (const auto& e : demos.episodes) {
    for (std::size_t t = 0; t < e.size(); ++t, ++row) {
      const auto s = e.state(t);
      for (std::size_t j = 0; j < s.size(); ++j) expert_inputs_(row, static_cast<Eigen::Index>(j)) = s[j];
      expert_inputs_(row, static_cast<Eigen::Index>(demos.state_dim + e.actions[t])) = 1.0;
    }
  }
}

void HighwayImitation::restore(disc::DiscriminatorParams params, disc::AdamState opt) {
  if (!params.same_shape(disc_)) throw DomainError("restored discriminator has the wrong shape");
  disc_ = std::move(params);
  opt_ = std::move(opt);
}

RolloutResult HighwayImitation::rollout(const RolloutTask& task,
                                        const policy::PolicyParams& params,
                                        const policy::RunningNormalizer& normalizer) const {
  RolloutResult out;
  out.direction = task.direction;
  out.sign = task.sign;
  out.trajectory = policy_rollout(env_, params, normalizer, task.seed);
  out.reward = disc::trajectory_reward(disc_, out.trajectory);
  return out;
}

double HighwayImitation::update(std::span<const RolloutResult> results, int iteration) {
  struct PairRef {
    const Trajectory* trajectory;
    std::size_t step;
  };
  std::vector<PairRef> pairs;
  for (const auto& r : results) {
    for (std::size_t t = 0; t < r.trajectory.size(); ++t) pairs.push_back({&r.trajectory, t});
  }
  if (pairs.empty()) return 0.0;

  Rng rng(derive_seed({seed_, 0x64697363ULL, static_cast<std::uint64_t>(iteration)}));
  for (std::size_t i = pairs.size() - 1; i > 0; --i) {
    std::swap(pairs[i], pairs[rng.below(i + 1)]);
  }

  const std::size_t half = training_.batch_size / 2;
  const auto width = static_cast<Eigen::Index>(disc_.input_dim());
  const std::size_t n = env_.observation_size();
  double loss_sum = 0.0;
  int batches = 0;
  for (std::size_t start = 0; start < pairs.size(); start += half) {
    const std::size_t count = std::min(half, pairs.size() - start);
    const auto rows = static_cast<Eigen::Index>(count);
    disc::LabeledBatch policy_batch{Eigen::MatrixXd::Zero(rows, width),
                                    Eigen::VectorXd::Constant(rows, disc::kPolicyLabel)};
    disc::LabeledBatch expert_batch{Eigen::MatrixXd(rows, width),
                                    Eigen::VectorXd::Constant(rows, disc::kExpertLabel)};
    for (Eigen::Index i = 0; i < rows; ++i) {
      const PairRef& ref = pairs[start + static_cast<std::size_t>(i)];
      const auto s = ref.trajectory->state(ref.step);
      for (std::size_t j = 0; j < n; ++j) policy_batch.inputs(i, static_cast<Eigen::Index>(j)) = s[j];
      policy_batch.inputs(i, static_cast<Eigen::Index>(n + ref.trajectory->actions[ref.step])) = 1.0;
      const auto pick = static_cast<Eigen::Index>(
          rng.below(static_cast<std::uint64_t>(expert_inputs_.rows())));
      expert_batch.inputs.row(i) = expert_inputs_.row(pick);
    }
    loss_sum += disc::lsgan_loss(disc_, expert_batch, policy_batch);
    auto [next, opt] = disc::disc_update(disc_, opt_, expert_batch, policy_batch);
    disc_ = std::move(next);
    opt_ = std::move(opt);
    ++batches;
  }
  return loss_sum / batches;
}

disc::DiscriminatorParams initial_discriminator(std::size_t state_dim, std::size_t action_count,
                                                std::size_t hidden, std::uint64_t seed) {
  Rng rng(derive_seed({seed, 0x64696e69ULL}));
  return disc::DiscriminatorParams::glorot(state_dim + action_count, hidden, rng);
}

RailOutcome rail_train(const sim::HighwayConfig& env_config, const DemonstrationSet& demos,
                       const RailConfig& rail, const PolicySpec& spec,
                       const std::optional<PolicyInit>& init,
                       const DiscriminatorTraining& training) {
  rail.validate();
  const sim::Highway env(env_config);
  const std::size_t n = env.observation_size();
  const std::size_t p = sim::kActionCount;

  RailState state;
  if (init) {
    if (init->params.state_dim() != n || init->params.action_dim() != p) {
      throw DomainError("initial policy shape does not match the environment");
    }
    state.theta = init->params;
    state.normalizer = init->normalizer;
  } else {
    state.theta = policy::PolicyParams::zeros(spec.kind, n, spec.hidden, p);
    state.normalizer = policy::RunningNormalizer(n);
  }
  state.schedule = policy::NoiseSchedule::make(rail.nu_init, rail.noise_increment, rail.eval_period);

  HighwayImitation objective(env, demos, initial_discriminator(n, p, training.hidden, rail.seed),
                             training, rail.seed);
  RailTrainer trainer(rail, objective, std::move(state));
  RailOutcome out;
  out.reports = trainer.run();
  out.theta = trainer.state().theta;
  out.normalizer = trainer.state().normalizer;
  out.discriminator = objective.discriminator();
  return out;
}

}  // namespace rail::learn
