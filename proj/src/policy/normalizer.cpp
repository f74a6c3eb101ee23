#include "rail/policy/normalizer.hpp"

#include <cmath>
#include <string>

#include "rail/core/error.hpp"

namespace rail::policy {

RunningNormalizer::RunningNormalizer(std::size_t dim)
    : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
      m2_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}

RunningNormalizer::RunningNormalizer(std::uint64_t count, Eigen::VectorXd mean, Eigen::VectorXd m2)
    : count_(count), mean_(std::move(mean)), m2_(std::move(m2)) {
  if (mean_.size() != m2_.size()) throw DomainError("normalizer mean/m2 length mismatch");
  if ((m2_.array() < 0.0).any()) throw DomainError("normalizer m2 must be non-negative");
}

Eigen::VectorXd RunningNormalizer::variance() const {
  if (count_ == 0) return Eigen::VectorXd::Zero(mean_.size());
  return m2_ / static_cast<double>(count_);
}

void RunningNormalizer::merge(const RunningNormalizer& other) {
  if (other.dim() != dim()) throw DomainError("normalizer dimension mismatch in merge");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const Eigen::VectorXd delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += other.m2_ + delta.cwiseProduct(delta) * (na * nb / n);
  count_ += other.count_;
}

RunningNormalizer RunningNormalizer::updated(std::span<const double> batch) const {
  RunningNormalizer out = *this;
  out.update(batch);
  return out;
}

void RunningNormalizer::update(std::span<const double> batch) {
  const std::size_t d = dim();
  if (d == 0 || batch.size() % d != 0) {
    throw DomainError("normalizer batch of " + std::to_string(batch.size()) +
                      " values is not a whole number of " + std::to_string(d) + "-vectors");
  }
  const std::size_t rows = batch.size() / d;
  if (rows == 0) return;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> x(batch.data(), static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(d));
  RunningNormalizer block(d);
  block.count_ = rows;
  block.mean_ = x.colwise().sum().transpose() / static_cast<double>(rows);
  block.m2_ = (x.rowwise() - block.mean_.transpose()).colwise().squaredNorm().transpose();
  merge(block);
}

void RunningNormalizer::whiten_into(std::span<const double> state,
                                    Eigen::Ref<Eigen::VectorXd> out) const {
  if (state.size() != dim()) {
    throw DomainError("state length " + std::to_string(state.size()) +
                      " does not match normalizer dimension " + std::to_string(dim()));
  }
  const Eigen::Map<const Eigen::VectorXd> s(state.data(), static_cast<Eigen::Index>(state.size()));
  if (count_ <= 1) {
    out = s;
    return;
  }
  const double inv_n = 1.0 / static_cast<double>(count_);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double sd = std::max(std::sqrt(m2_[i] * inv_n), kStdFloor);
    out[i] = (s[i] - mean_[i]) / sd;
  }
}

Eigen::VectorXd RunningNormalizer::whiten(std::span<const double> state) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(state.size()));
  whiten_into(state, out);
  return out;
}

bool RunningNormalizer::operator==(const RunningNormalizer& other) const {
  return count_ == other.count_ && mean_.size() == other.mean_.size() && mean_ == other.mean_ &&
         m2_ == other.m2_;
}

}  // namespace rail::policy
