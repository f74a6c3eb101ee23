#include "rail/learn/bc.hpp"

#include <cmath>

#include "rail/core/error.hpp"

namespace rail::learn {

using policy::PolicyKind;
using policy::PolicyParams;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

PolicyParams bc_initial_params(const BcOptions& options, std::size_t state_dim,
                               std::size_t action_count) {
  PolicyParams params = PolicyParams::zeros(options.kind, state_dim, options.hidden, action_count);
  if (options.kind == PolicyKind::kLinear) return params;
  Rng rng(derive_seed({options.seed, 0x6263696eULL}));
  for (auto& layer : params.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.rows() + layer.cols()));
    for (Eigen::Index r = 0; r < layer.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.cols(); ++c) layer(r, c) = rng.uniform(-bound, bound);
    }
  }
  return params;
}

BcResult bc_train(const DemonstrationSet& demos, const BcOptions& options) {
  demos.validate();
  if (options.epochs < 0) throw DomainError("bc epochs must be >= 0");
  const std::size_t n = demos.state_dim;
  const std::size_t p = demos.action_count;
  const auto rows = static_cast<Eigen::Index>(demos.total_steps());

  BcResult result;
  result.normalizer = policy::RunningNormalizer(n);
  for (const auto& e : demos.episodes) result.normalizer.update(e.states);
  result.params = bc_initial_params(options, n, p);

  // Whitened design matrix (rows x n) and one-hot targets (rows x p).
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(n));
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(p));
  Eigen::Index row = 0;
  for (const auto& e : demos.episodes) {
    for (std::size_t t = 0; t < e.size(); ++t, ++row) {
      x.row(row) = result.normalizer.whiten(e.state(t)).transpose();
      target(row, e.actions[t]) = 1.0;
    }
  }

  auto& layers = result.params.layers;
  std::vector<Eigen::MatrixXd> m1, m2;
  for (const auto& l : layers) {
    m1.push_back(Eigen::MatrixXd::Zero(l.rows(), l.cols()));
    m2.push_back(Eigen::MatrixXd::Zero(l.rows(), l.cols()));
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const double scale = 2.0 / static_cast<double>(rows * static_cast<Eigen::Index>(p));

  auto loss_and_grads = [&](std::vector<Eigen::MatrixXd>* grads) {
    Eigen::MatrixXd hidden;
    Eigen::MatrixXd logits;
    if (result.params.kind == PolicyKind::kLinear) {
      logits.noalias() = x * layers[0].transpose();
    } else {
      hidden = (x * layers[0].transpose()).array().tanh();
      logits.noalias() = hidden * layers[1].transpose();
    }
    const Eigen::MatrixXd err = logits - target;
    double loss = err.squaredNorm() / static_cast<double>(err.size());
    for (const auto& l : layers) loss += options.weight_decay * l.squaredNorm();
    if (grads) {
      const Eigen::MatrixXd dlogits = scale * err;
      grads->clear();
      if (result.params.kind == PolicyKind::kLinear) {
        grads->push_back(dlogits.transpose() * x);
      } else {
        const Eigen::MatrixXd dhidden =
            (dlogits * layers[1]).array() * (1.0 - hidden.array().square());
        grads->push_back(dhidden.transpose() * x);
        grads->push_back(dlogits.transpose() * hidden);
      }
      for (std::size_t i = 0; i < layers.size(); ++i) {
        (*grads)[i] += 2.0 * options.weight_decay * layers[i];
      }
    }
    return loss;
  };

  std::vector<Eigen::MatrixXd> grads;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    loss_and_grads(&grads);
    const double c1 = 1.0 - std::pow(kBeta1, epoch);
    const double c2 = 1.0 - std::pow(kBeta2, epoch);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * grads[i];
      m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * grads[i].cwiseProduct(grads[i]);
      layers[i].array() -= options.learning_rate * (m1[i].array() / c1) /
                           ((m2[i].array() / c2).sqrt() + kEps);
    }
  }
  result.final_loss = loss_and_grads(nullptr);
  return result;
}

double action_agreement(const PolicyParams& params, const policy::RunningNormalizer& normalizer,
                        const DemonstrationSet& demos) {
  std::size_t agree = 0;
  std::size_t total = 0;
  for (const auto& e : demos.episodes) {
    for (std::size_t t = 0; t < e.size(); ++t) {
      agree += policy::policy_act(params, normalizer, e.state(t)) == e.actions[t] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
}

}  // namespace rail::learn
