#include "rail/policy/policy.hpp"

#include <string>

#include "rail/core/error.hpp"

namespace rail::policy {

std::string to_string(PolicyKind kind) {
  return kind == PolicyKind::kLinear ? "linear" : "two_layer";
}

PolicyKind parse_policy_kind(const std::string& text) {
  if (text == "linear") return PolicyKind::kLinear;
  if (text == "two_layer") return PolicyKind::kTwoLayer;
  throw DomainError("unknown policy kind '" + text + "' (expected linear or two_layer)");
}

PolicyParams PolicyParams::zeros(PolicyKind kind, std::size_t n, std::size_t h, std::size_t p) {
  if (n == 0 || p == 0 || (kind == PolicyKind::kTwoLayer && h == 0)) {
    throw DomainError("policy dimensions must be positive");
  }
  const auto N = static_cast<Eigen::Index>(n);
  const auto H = static_cast<Eigen::Index>(h);
  const auto P = static_cast<Eigen::Index>(p);
  PolicyParams out;
  out.kind = kind;
  if (kind == PolicyKind::kLinear) {
    out.layers.push_back(Eigen::MatrixXd::Zero(P, N));
  } else {
    out.layers.push_back(Eigen::MatrixXd::Zero(H, N));
    out.layers.push_back(Eigen::MatrixXd::Zero(P, H));
  }
  return out;
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& m : layers) total += static_cast<std::size_t>(m.size());
  return total;
}

bool PolicyParams::all_finite() const {
  for (const auto& m : layers) {
    if (!m.allFinite()) return false;
  }
  return true;
}

bool PolicyParams::same_shape(const PolicyParams& other) const {
  if (kind != other.kind || layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].rows() != other.layers[i].rows() || layers[i].cols() != other.layers[i].cols()) {
      return false;
    }
  }
  return true;
}

bool PolicyParams::operator==(const PolicyParams& other) const {
  if (!same_shape(other)) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i] != other.layers[i]) return false;
  }
  return true;
}

Eigen::VectorXd policy_logits(const PolicyParams& params, const RunningNormalizer& normalizer,
                              std::span<const double> state) {
  if (state.size() != params.state_dim()) {
    throw DomainError("state length " + std::to_string(state.size()) +
                      " does not match policy input " + std::to_string(params.state_dim()));
  }
  const Eigen::VectorXd x = normalizer.whiten(state);
  if (params.kind == PolicyKind::kLinear) return params.layers[0] * x;
  const Eigen::VectorXd hidden = (params.layers[0] * x).array().tanh();
  return params.layers[1] * hidden;
}

int argmax_lowest(const Eigen::VectorXd& logits) {
  int best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  }
  return best;
}

int policy_act(const PolicyParams& params, const RunningNormalizer& normalizer,
               std::span<const double> state) {
  return argmax_lowest(policy_logits(params, normalizer, state));
}

PolicyParams perturb(const PolicyParams& params, const NoiseDirection& delta, double nu, int sign) {
  if (sign != 1 && sign != -1) throw DomainError("perturbation sign must be +1 or -1");
  if (delta.layers.size() != params.layers.size()) {
    throw DomainError("noise direction has a different number of layers than the policy");
  }
  PolicyParams out = params;
  const double scale = sign * nu;
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    if (delta.layers[i].rows() != params.layers[i].rows() ||
        delta.layers[i].cols() != params.layers[i].cols()) {
      throw DomainError("noise direction layer " + std::to_string(i) + " shape mismatch");
    }
    out.layers[i] += scale * delta.layers[i];
  }
  return out;
}

std::vector<NoiseDirection> sample_directions(Rng& rng, std::size_t count,
                                              const PolicyParams& shape_of) {
  if (count == 0) throw DomainError("need at least one direction");
  std::vector<NoiseDirection> out(count);
  for (auto& dir : out) {
    dir.layers.reserve(shape_of.layers.size());
    for (const auto& layer : shape_of.layers) {
      Eigen::MatrixXd m(layer.rows(), layer.cols());
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal();
      }
      dir.layers.push_back(std::move(m));
    }
  }
  return out;
}

}  // namespace rail::policy
