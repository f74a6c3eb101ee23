#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rail/core/error.hpp"
#include "rail/disc/discriminator.hpp"

using namespace rail;
using namespace rail::disc;

namespace {

// Output 0.5 everywhere.
DiscriminatorParams half_everywhere(std::size_t input_dim) {
  Rng r(1);
  auto p = DiscriminatorParams::glorot(input_dim, 8, r);
  p.w2.setZero();
  p.b2 = 0.0;
  return p;
}

// Single hidden unit with w2 = 1 and the pre-activation equal to `z_hidden`,
// so D = sigmoid(tanh(z_hidden) + b2).
DiscriminatorParams single_unit(double b1, double b2) {
  auto p = DiscriminatorParams::zeros(3, 1);
  p.b1[0] = b1;
  p.w2[0] = 1.0;
  p.b2 = b2;
  return p;
}

double logit(double d) { return std::log(d / (1.0 - d)); }

}  // namespace

TEST_SUITE("discriminator") {
  TEST_CASE("forward matches the closed form") {
    auto p = DiscriminatorParams::zeros(4, 2);
    p.w1 << 0.5, -1.0, 1.0, 0.0, 0.2, 0.3, 0.0, -0.4;
    p.b1 << 0.1, -0.2;
    p.w2 << 1.5, -0.5;
    p.b2 = 0.25;
    const std::vector<double> s{0.4, -0.6};
    // input = [0.4, -0.6, 1, 0] for action 0 of 2
    const double h0 = std::tanh(0.5 * 0.4 + 0.6 + 1.0 + 0.1);
    const double h1 = std::tanh(0.2 * 0.4 - 0.3 * 0.6 - 0.2);
    const double z = 1.5 * h0 - 0.5 * h1 + 0.25;
    CHECK(disc_forward(p, s, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-14));
    CHECK(reward_signal(p, s, 0) == doctest::Approx(z).epsilon(1e-12));
    Eigen::MatrixXd x(1, 4);
    x << 0.4, -0.6, 1.0, 0.0;
    CHECK(disc_forward_batch(p, x)[0] == doctest::Approx(disc_forward(p, s, 0)).epsilon(1e-15));
  }

  TEST_CASE("reward identities") {
    const auto half = half_everywhere(5);
    const std::vector<double> s{0.1, 0.2, 0.3};
    CHECK(disc_forward(half, s, 1) == 0.5);
    CHECK(reward_signal(half, s, 1) == 0.0);
    Rng r(4);
    const auto e = testing::random_labeled_batch(r, 7, 3, 2, kExpertLabel);
    const auto q = testing::random_labeled_batch(r, 5, 3, 2, kPolicyLabel);
    CHECK(lsgan_loss(half, e, q) == 0.25);
  }

  TEST_CASE("reward is the logit of D") {
    const std::vector<double> s{0.0, 0.0};
    for (int i = 0; i < 200; ++i) {
      const double b2 = -6.0 + 12.0 * i / 199.0;
      const auto p = single_unit(0.3, b2);
      const double d = disc_forward(p, s, 0);
      CHECK(std::abs(reward_signal(p, s, 0) - logit(d)) < 1e-12);
    }
  }

  TEST_CASE("output is clamped") {
    const std::vector<double> s{0.0, 0.0};
    CHECK(disc_forward(single_unit(0.0, 60.0), s, 0) == 1.0 - kOutputClamp);
    CHECK(disc_forward(single_unit(0.0, -60.0), s, 0) == kOutputClamp);
    CHECK(std::isfinite(reward_signal(single_unit(0.0, 800.0), s, 0)));
  }

  TEST_CASE("analytic gradient matches central differences") {
    Rng r(2024);
    for (int i = 0; i < 30; ++i) {
      const auto inst = testing::random_grad_instance(r);
      const auto analytic = disc_grad(inst.params, inst.expert, inst.policy).flatten();
      const auto numeric = testing::finite_difference_grad(inst.params, inst.expert, inst.policy, 1e-6);
      const auto c = testing::compare_gradients(analytic, numeric, 1e-6);
      CHECK(c.max_rel < 1e-4);
    }
  }

  TEST_CASE("gradient is zero where the clamp binds") {
    auto p = single_unit(0.0, 60.0);
    Rng r(3);
    const auto e = testing::random_labeled_batch(r, 4, 2, 1, kExpertLabel);
    const auto q = testing::random_labeled_batch(r, 4, 2, 1, kPolicyLabel);
    CHECK(disc_grad(p, e, q).flatten().norm() == 0.0);
  }

  TEST_CASE("adam step matches an independent implementation") {
    Rng r(8);
    auto inst = testing::random_grad_instance(r);
    auto params = inst.params;
    auto opt = AdamState::for_params(params, 1e-3);
    Eigen::VectorXd theta = params.flatten();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
    for (int t = 1; t <= 5; ++t) {
      DiscriminatorParams at = params;
      at.assign(theta);
      const Eigen::VectorXd g = disc_grad(at, inst.expert, inst.policy).flatten();
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        m[i] = 0.9 * m[i] + 0.1 * g[i];
        v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
        const double mh = m[i] / (1.0 - std::pow(0.9, t));
        const double vh = v[i] / (1.0 - std::pow(0.999, t));
        theta[i] -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
      }
      std::tie(params, opt) = disc_update(params, opt, inst.expert, inst.policy);
      CHECK(opt.step == t);
      CHECK((params.flatten() - theta).cwiseAbs().maxCoeff() < 1e-14);
    }
  }

  TEST_CASE("training separates two distributions") {
    Rng r(12);
    auto params = DiscriminatorParams::glorot(6, 16, r);
    auto opt = AdamState::for_params(params, 1e-2);
    LabeledBatch e, q;
    e.inputs = Eigen::MatrixXd::Zero(64, 6);
    q.inputs = Eigen::MatrixXd::Zero(64, 6);
    for (int i = 0; i < 64; ++i) {
      e.inputs.row(i) << 1.0 + 0.1 * r.normal(), 0.1 * r.normal(), 0.1 * r.normal(), 1, 0, 0;
      q.inputs.row(i) << -1.0 + 0.1 * r.normal(), 0.1 * r.normal(), 0.1 * r.normal(), 0, 0, 1;
    }
    e.labels = Eigen::VectorXd::Ones(64);
    q.labels = Eigen::VectorXd::Zero(64);
    const double before = lsgan_loss(params, e, q);
    for (int i = 0; i < 300; ++i) std::tie(params, opt) = disc_update(params, opt, e, q);
    CHECK(lsgan_loss(params, e, q) < 0.1 * before);
    CHECK(disc_forward_batch(params, e.inputs).minCoeff() > 0.5);
    CHECK(disc_forward_batch(params, q.inputs).maxCoeff() < 0.5);
  }

  TEST_CASE("trajectory reward sums the per-step signal") {
    Rng r(5);
    const auto p = DiscriminatorParams::glorot(5, 4, r);
    Trajectory t;
    t.state_dim = 2;
    double want = 0.0;
    for (int i = 0; i < 6; ++i) {
      const std::vector<double> s{r.normal(), r.normal()};
      const auto a = static_cast<std::uint8_t>(r.below(3));
      t.push(s, a);
      want += reward_signal(p, s, a);
    }
    CHECK(trajectory_reward(p, t) == doctest::Approx(want).epsilon(1e-14));
    CHECK_THROWS_AS(trajectory_reward(p, Trajectory{2, {}, {}, {}}), DomainError);
  }

  TEST_CASE("domain errors") {
    const auto p = DiscriminatorParams::zeros(5, 2);
    CHECK_THROWS_AS(disc_forward(p, std::vector<double>{1, 2}, 3), DomainError);
    CHECK_THROWS_AS(disc_forward(p, std::vector<double>(5, 0.0), 0), DomainError);
    CHECK_THROWS_AS(make_input(std::vector<double>{1.0}, -1, 2), DomainError);
    LabeledBatch empty{Eigen::MatrixXd(0, 5), Eigen::VectorXd(0)};
    LabeledBatch one{Eigen::MatrixXd::Zero(1, 5), Eigen::VectorXd::Zero(1)};
    CHECK_THROWS_AS(lsgan_loss(p, empty, one), DomainError);
    Eigen::VectorXd bad(3);
    auto q = p;
    CHECK_THROWS_AS(q.assign(bad), DomainError);
  }
}
