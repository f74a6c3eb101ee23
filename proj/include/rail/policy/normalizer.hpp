#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace rail::policy {

// Running per-dimension mean and sum of squared deviations (Welford / Chan
// merge). The whitening transform is diag(var)^(-1/2) (s - mean) with the
// population variance, floored at kStdFloor; with count <= 1 it is the
// identity.
class RunningNormalizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  RunningNormalizer() = default;
  explicit RunningNormalizer(std::size_t dim);
  RunningNormalizer(std::uint64_t count, Eigen::VectorXd mean, Eigen::VectorXd m2);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  std::uint64_t count() const noexcept { return count_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::VectorXd& m2() const noexcept { return m2_; }
  Eigen::VectorXd variance() const;

  // Batch is `rows` vectors of length dim() stored contiguously. Accumulated
  // as one merged block, so results depend only on the batch contents and the
  // order of update() calls.
  RunningNormalizer updated(std::span<const double> batch) const;
  void update(std::span<const double> batch);
  void merge(const RunningNormalizer& other);

  Eigen::VectorXd whiten(std::span<const double> state) const;
  // Same transform written into `out` (size dim()).
  void whiten_into(std::span<const double> state, Eigen::Ref<Eigen::VectorXd> out) const;

  bool operator==(const RunningNormalizer& other) const;

 private:
  std::uint64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

}  // namespace rail::policy
