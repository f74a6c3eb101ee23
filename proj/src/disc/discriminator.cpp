#include "rail/disc/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rail/core/error.hpp"

namespace rail::disc {

namespace {

struct Forward {
  Eigen::MatrixXd hidden;  // B x m, tanh activations
  Eigen::VectorXd raw;     // B, sigmoid outputs before the clamp
  Eigen::VectorXd out;     // B, clamped
};

Forward forward(const DiscriminatorParams& p, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != p.input_dim()) {
    throw DomainError("discriminator input width " + std::to_string(x.cols()) +
                      " does not match " + std::to_string(p.input_dim()));
  }
  Forward f;
  f.hidden.noalias() = x * p.w1.transpose();
  f.hidden.rowwise() += p.b1.transpose();
  f.hidden = f.hidden.array().tanh();
  Eigen::VectorXd z = f.hidden * p.w2;
  z.array() += p.b2;
  f.raw = (1.0 / (1.0 + (-z.array()).exp())).matrix();
  f.out = f.raw.array().max(kOutputClamp).min(1.0 - kOutputClamp).matrix();
  return f;
}

double clamp_output(double d) { return std::clamp(d, kOutputClamp, 1.0 - kOutputClamp); }

// Accumulates the gradient of 0.5 * mean((D - y)^2) over one batch into g.
void accumulate_grad(const DiscriminatorParams& p, const LabeledBatch& batch,
                     DiscriminatorParams& g) {
  const Forward f = forward(p, batch.inputs);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Eigen::VectorXd dz(static_cast<Eigen::Index>(batch.size()));
  for (Eigen::Index i = 0; i < dz.size(); ++i) {
    const double r = f.raw[i];
    const bool clamped = r < kOutputClamp || r > 1.0 - kOutputClamp;
    dz[i] = clamped ? 0.0 : (f.out[i] - batch.labels[i]) * inv_b * r * (1.0 - r);
  }
  g.b2 += dz.sum();
  g.w2.noalias() += f.hidden.transpose() * dz;
  Eigen::MatrixXd dpre = (dz * p.w2.transpose()).array() * (1.0 - f.hidden.array().square());
  g.b1.noalias() += dpre.colwise().sum().transpose();
  g.w1.noalias() += dpre.transpose() * batch.inputs;
}

void require_nonempty(const LabeledBatch& b, const char* which) {
  if (b.size() == 0) throw DomainError(std::string(which) + " batch is empty");
  if (b.labels.size() != b.inputs.rows()) {
    throw DomainError(std::string(which) + " batch labels do not match its rows");
  }
}

}  // namespace

DiscriminatorParams DiscriminatorParams::zeros(std::size_t input_dim, std::size_t hidden) {
  const auto m = static_cast<Eigen::Index>(hidden);
  DiscriminatorParams p;
  p.w1 = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(input_dim));
  p.b1 = Eigen::VectorXd::Zero(m);
  p.w2 = Eigen::VectorXd::Zero(m);
  p.b2 = 0.0;
  return p;
}

DiscriminatorParams DiscriminatorParams::glorot(std::size_t input_dim, std::size_t hidden,
                                                Rng& rng) {
  DiscriminatorParams p = zeros(input_dim, hidden);
  const double a1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
  for (Eigen::Index r = 0; r < p.w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.w1.cols(); ++c) p.w1(r, c) = rng.uniform(-a1, a1);
  }
  const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (Eigen::Index r = 0; r < p.w2.size(); ++r) p.w2[r] = rng.uniform(-a2, a2);
  return p;
}

std::size_t DiscriminatorParams::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + 1);
}

bool DiscriminatorParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && std::isfinite(b2);
}

bool DiscriminatorParams::same_shape(const DiscriminatorParams& o) const {
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() && b1.size() == o.b1.size() &&
         w2.size() == o.w2.size();
}

Eigen::VectorXd DiscriminatorParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  flat.segment(at, w1.size()) = Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size());
  at += w1.size();
  flat.segment(at, b1.size()) = b1;
  at += b1.size();
  flat.segment(at, w2.size()) = w2;
  at += w2.size();
  flat[at] = b2;
  return flat;
}

void DiscriminatorParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw DomainError("flat discriminator vector has the wrong length");
  }
  Eigen::Index at = 0;
  Eigen::Map<Eigen::VectorXd>(w1.data(), w1.size()) = flat.segment(at, w1.size());
  at += w1.size();
  b1 = flat.segment(at, b1.size());
  at += b1.size();
  w2 = flat.segment(at, w2.size());
  at += w2.size();
  b2 = flat[at];
}

bool DiscriminatorParams::operator==(const DiscriminatorParams& o) const {
  return same_shape(o) && w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
}

Eigen::VectorXd make_input(std::span<const double> state, int action, std::size_t action_count) {
  if (action < 0 || static_cast<std::size_t>(action) >= action_count) {
    throw DomainError("action id " + std::to_string(action) + " outside [0, " +
                      std::to_string(action_count) + ")");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state.size() + action_count));
  for (std::size_t i = 0; i < state.size(); ++i) x[static_cast<Eigen::Index>(i)] = state[i];
  x[static_cast<Eigen::Index>(state.size()) + action] = 1.0;
  return x;
}

double disc_forward(const DiscriminatorParams& params, std::span<const double> state, int action) {
  if (state.size() >= params.input_dim()) {
    throw DomainError("state length " + std::to_string(state.size()) +
                      " leaves no room for actions in discriminator input " +
                      std::to_string(params.input_dim()));
  }
  const std::size_t actions = params.input_dim() - state.size();
  const Eigen::VectorXd x = make_input(state, action, actions);
  Eigen::VectorXd pre = params.b1;
  pre.noalias() += params.w1 * x;
  const double z = params.w2.dot(pre.array().tanh().matrix()) + params.b2;
  return clamp_output(1.0 / (1.0 + std::exp(-z)));
}

Eigen::VectorXd disc_forward_batch(const DiscriminatorParams& params,
                                   const Eigen::MatrixXd& inputs) {
  return forward(params, inputs).out;
}

double lsgan_loss(const DiscriminatorParams& params, const LabeledBatch& expert,
                  const LabeledBatch& policy) {
  require_nonempty(expert, "expert");
  require_nonempty(policy, "policy");
  const Eigen::VectorXd de = forward(params, expert.inputs).out;
  const Eigen::VectorXd dp = forward(params, policy.inputs).out;
  return 0.5 * (de - expert.labels).squaredNorm() / static_cast<double>(expert.size()) +
         0.5 * (dp - policy.labels).squaredNorm() / static_cast<double>(policy.size());
}

DiscriminatorParams disc_grad(const DiscriminatorParams& params, const LabeledBatch& expert,
                              const LabeledBatch& policy) {
  require_nonempty(expert, "expert");
  require_nonempty(policy, "policy");
  DiscriminatorParams g = DiscriminatorParams::zeros(params.input_dim(), params.hidden());
  accumulate_grad(params, expert, g);
  accumulate_grad(params, policy, g);
  return g;
}

AdamState AdamState::for_params(const DiscriminatorParams& params, double learning_rate) {
  AdamState s;
  s.m = DiscriminatorParams::zeros(params.input_dim(), params.hidden());
  s.v = s.m;
  s.learning_rate = learning_rate;
  return s;
}

std::pair<DiscriminatorParams, AdamState> disc_update(const DiscriminatorParams& params,
                                                      const AdamState& opt,
                                                      const LabeledBatch& expert,
                                                      const LabeledBatch& policy) {
  const DiscriminatorParams grad = disc_grad(params, expert, policy);
  AdamState next = opt;
  next.step += 1;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(next.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(next.step));

  const Eigen::VectorXd g = grad.flatten();
  Eigen::VectorXd m = opt.m.flatten();
  Eigen::VectorXd v = opt.v.flatten();
  m = opt.beta1 * m + (1.0 - opt.beta1) * g;
  v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
  next.m.assign(m);
  next.v.assign(v);

  DiscriminatorParams out = params;
  Eigen::VectorXd theta = params.flatten();
  theta.array() -= opt.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.epsilon);
  out.assign(theta);
  return {std::move(out), std::move(next)};
}

double reward_signal(const DiscriminatorParams& params, std::span<const double> state, int action) {
  const double d = disc_forward(params, state, action);
  return std::log(d) - std::log1p(-d);
}

double trajectory_reward(const DiscriminatorParams& params, const Trajectory& trajectory) {
  if (trajectory.empty()) throw DomainError("trajectory_reward of an empty trajectory");
  const std::size_t n = trajectory.state_dim;
  if (n >= params.input_dim()) {
    throw DomainError("trajectory state width does not fit the discriminator input");
  }
  const auto rows = static_cast<Eigen::Index>(trajectory.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(params.input_dim()));
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  x.leftCols(static_cast<Eigen::Index>(n)) =
      Eigen::Map<const RowMajor>(trajectory.states.data(), rows, static_cast<Eigen::Index>(n));
  const std::size_t actions = params.input_dim() - n;
  for (Eigen::Index t = 0; t < rows; ++t) {
    const auto a = trajectory.actions[static_cast<std::size_t>(t)];
    if (a >= actions) throw DomainError("trajectory action id out of range");
    x(t, static_cast<Eigen::Index>(n + a)) = 1.0;
  }
  const Eigen::VectorXd d = forward(params, x).out;
  double total = 0.0;
  for (Eigen::Index t = 0; t < rows; ++t) total += std::log(d[t]) - std::log1p(-d[t]);
  return total;
}

}  // namespace rail::disc
