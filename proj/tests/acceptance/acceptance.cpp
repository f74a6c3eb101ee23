// Acceptance suite. Usage: rail_acceptance <criterion 1-10 | all>
// Prints one "criterion N: PASS|FAIL ..." line per criterion and exits
// non-zero when any requested criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "rail/core/digest.hpp"
#include "rail/core/error.hpp"
#include "rail/disc/discriminator.hpp"
#include "rail/io/checkpoint.hpp"
#include "rail/io/config.hpp"
#include "rail/io/demo_file.hpp"
#include "rail/learn/bc.hpp"
#include "rail/learn/demonstrations.hpp"
#include "rail/learn/imitation.hpp"
#include "rail/learn/rail_trainer.hpp"
#include "rail/policy/normalizer.hpp"
#include "rail/sim/evaluate.hpp"

using namespace rail;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int worker_count() {
  if (const char* w = std::getenv("RAIL_ACCEPTANCE_WORKERS")) return std::max(1, std::atoi(w));
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---- shared experiment settings ----------------------------------------

constexpr int kDemoEpisodes = 40;
constexpr std::uint64_t kDemoSeed = 1;
constexpr std::uint64_t kHeldOutSeed = 2;
constexpr int kEvalEpisodes = 16;
constexpr std::uint64_t kEvalSeed = 1000;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

const sim::HighwayConfig& env_config() {
  static const sim::HighwayConfig c{};
  return c;
}

const learn::DemonstrationSet& demos() {
  static const learn::DemonstrationSet d = [] {
    auto set = learn::record_demonstrations(sim::Highway(env_config()), kDemoEpisodes, kDemoSeed);
    set.config_digest = io::config_digest(env_config());
    return set;
  }();
  return d;
}

const sim::DrivingStats& expert_stats() {
  static const sim::DrivingStats s = sim::evaluate_policy(
      sim::Highway(env_config()), sim::expert_policy(env_config()), kEvalEpisodes, kEvalSeed);
  return s;
}

// RAIL settings shared by criteria 6-8.
learn::RailConfig imitation_rail(std::uint64_t seed, int directions, int iterations) {
  learn::RailConfig r;
  r.directions = directions;
  r.iterations = iterations;
  r.seed = seed;
  r.workers = worker_count();
  return r;
}

learn::BcResult bc_init(policy::PolicyKind kind, std::uint64_t seed) {
  io::RunConfig rc;
  rc.policy = {kind, kind == policy::PolicyKind::kTwoLayer ? std::size_t{10} : std::size_t{0}};
  rc.bc.seed = seed;
  return learn::bc_train(demos(), rc.bc_options());
}

struct ImitationRun {
  sim::DrivingStats final_stats;
  std::vector<learn::IterationReport> reports;
};

// Trains a BC-initialized RAIL policy, caching the result on disk so that
// criteria sharing a run do not repeat it.
ImitationRun imitation_run(policy::PolicyKind kind, std::uint64_t seed, int directions,
                           int iterations) {
  const auto rail = imitation_rail(seed, directions, iterations);
  std::ostringstream key;
  key << policy::to_string(kind) << '-' << seed << '-' << directions << '-' << iterations << '-'
      << io::config_digest(env_config()) << '-' << digest_hex(io::to_json(rail).dump());
  const fs::path cache = fs::path("acceptance_cache") / (digest_hex(key.str()) + ".txt");
  if (fs::exists(cache)) {
    std::ifstream in(cache);
    std::string stats_text, line;
    std::getline(in, line);
    stats_text = line + "\n";
    std::getline(in, line);
    stats_text += line + "\n";
    ImitationRun run;
    run.final_stats = sim::parse_driving_stats_csv(stats_text);
    while (std::getline(in, line)) {
      learn::IterationReport r;
      if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf", &r.iteration, &r.mean_reward,
                      &r.max_reward, &r.sigma_r, &r.disc_loss, &r.nu, &r.seconds) == 7) {
        run.reports.push_back(r);
      }
    }
    if (static_cast<int>(run.reports.size()) == iterations) return run;
  }

  const auto bc = bc_init(kind, seed);
  learn::PolicySpec spec{kind, bc.params.hidden_dim()};
  const auto out = learn::rail_train(env_config(), demos(), rail, spec,
                                     learn::PolicyInit{bc.params, bc.normalizer});
  ImitationRun run;
  run.reports = out.reports;
  const sim::Highway env(env_config());
  run.final_stats = sim::evaluate_policy(env, learn::as_driving_policy(out.theta, out.normalizer),
                                         kEvalEpisodes, kEvalSeed);
  fs::create_directories(cache.parent_path());
  std::ofstream o(cache);
  o << sim::driving_stats_csv(run.final_stats);
  for (const auto& r : run.reports) o << learn::metrics_row(r) << "\n";
  return run;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---- criteria -----------------------------------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  double worst_vector = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto inst = testing::random_grad_instance(rng);
    const auto analytic = disc::disc_grad(inst.params, inst.expert, inst.policy).flatten();
    const auto numeric = testing::finite_difference_grad(inst.params, inst.expert, inst.policy, 1e-4);
    const auto c = testing::compare_gradients(analytic, numeric, 1e-6);
    worst = std::max(worst, c.max_rel);
    worst_vector = std::max(worst_vector, c.vector_rel);
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 30.0, "worst entry relative error " + fmt("%.2e", worst) +
                                        ", worst vector relative error " + fmt("%.2e", worst_vector) +
                                        ", " + fmt("%.1f s", t)};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  constexpr std::size_t n = 8;
  constexpr int N = 16;
  Rng rng(77);
  std::vector<double> target(n);
  for (auto& x : target) x = rng.uniform(-2.0, 2.0);
  const testing::QuadraticObjective objective(target);

  // One update on random instances, against the brute-force rule.
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto theta = policy::PolicyParams::zeros(policy::PolicyKind::kLinear, n, 0, 1);
    for (Eigen::Index i = 0; i < theta.layers[0].size(); ++i) theta.layers[0].data()[i] = rng.uniform(-3.0, 3.0);
    const double nu = rng.uniform(0.001, 0.5);
    const double alpha = rng.uniform(0.001, 0.5);
    const auto deltas = policy::sample_directions(rng, N, theta);
    std::vector<learn::RolloutResult> results;
    std::vector<double> rp(N), rm(N);
    std::vector<std::vector<double>> flat;
    for (int k = 0; k < N; ++k) {
      rp[static_cast<std::size_t>(k)] = objective.value(policy::perturb(theta, deltas[static_cast<std::size_t>(k)], nu, 1));
      rm[static_cast<std::size_t>(k)] = objective.value(policy::perturb(theta, deltas[static_cast<std::size_t>(k)], nu, -1));
      results.push_back({k, -1, {}, rm[static_cast<std::size_t>(k)]});
      results.push_back({k, 1, {}, rp[static_cast<std::size_t>(k)]});
      flat.push_back(testing::flatten_layers(deltas[static_cast<std::size_t>(k)].layers));
    }
    const auto want = testing::brute_force_update(testing::flatten_layers(theta.layers), flat, rp,
                                                  rm, alpha, 1e-8);
    const auto got = testing::flatten_layers(
        learn::compute_update(theta, deltas, results, alpha, 1e-8).layers);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }

  // Full trainer on the surrogate.
  learn::RailConfig cfg;
  cfg.directions = N;
  cfg.step_size = 0.01;
  cfg.nu_init = 0.02;
  cfg.noise_increment = 0.0;
  cfg.iterations = 500;
  cfg.seed = 5;
  cfg.workers = worker_count();
  testing::QuadraticObjective obj(target);
  learn::RailState s;
  s.theta = policy::PolicyParams::zeros(policy::PolicyKind::kLinear, n, 0, 1);
  s.normalizer = policy::RunningNormalizer(n);
  s.schedule = policy::NoiseSchedule::make(cfg.nu_init, cfg.noise_increment, cfg.eval_period);
  learn::RailTrainer trainer(cfg, obj, s);
  int reached = -1;
  trainer.run([&](const learn::IterationReport& r, const learn::RailState& st) {
    if (reached < 0 && std::sqrt(std::abs(obj.value(st.theta))) < 1e-2) reached = r.iteration;
  });
  const double dist = std::sqrt(std::abs(obj.value(trainer.state().theta)));
  const double t = seconds_since(t0);
  return {worst < 1e-10 && reached > 0 && t < 60.0,
          "max update deviation " + fmt("%.2e", worst) + ", distance below 1e-2 at iteration " +
              std::to_string(reached) + ", final distance " + fmt("%.2e", dist) + ", " +
              fmt("%.1f s", t)};
}

Outcome criterion3() {
  Rng rng(3);
  auto half = disc::DiscriminatorParams::glorot(152, 64, rng);
  half.w2.setZero();
  half.b2 = 0.0;
  std::vector<double> s(147);
  for (auto& x : s) x = rng.normal();
  const bool zero = disc::reward_signal(half, s, 2) == 0.0;

  // D sweeps a 1000-point grid through the output bias of a one-unit net.
  double worst = 0.0;
  auto p = disc::DiscriminatorParams::zeros(3, 1);
  p.w2[0] = 1.0;
  const std::vector<double> s2{0.0, 0.0};
  for (int i = 0; i < 1000; ++i) {
    p.b2 = -12.0 + 24.0 * i / 999.0;
    const double d = disc::disc_forward(p, s2, 0);
    worst = std::max(worst, std::abs(disc::reward_signal(p, s2, 0) - std::log(d / (1.0 - d))));
  }

  auto e = testing::random_labeled_batch(rng, 64, 147, 5, disc::kExpertLabel);
  auto q = testing::random_labeled_batch(rng, 64, 147, 5, disc::kPolicyLabel);
  const double loss = disc::lsgan_loss(half, e, q);
  return {zero && worst < 1e-12 && loss == 0.25,
          std::string("reward(D=0.5) ") + (zero ? "= 0" : "!= 0") + ", max |reward - logit(D)| " +
              fmt("%.2e", worst) + ", lsgan_loss(D=0.5) " + fmt("%.17g", loss)};
}

Outcome criterion4() {
  const auto t0 = Clock::now();
  std::vector<std::string> digests;
  for (int w : {1, 2, 8}) {
    auto rail = imitation_rail(11, 32, 50);
    rail.workers = w;
    const auto out = learn::rail_train(env_config(), demos(), rail, learn::PolicySpec{});
    digests.push_back(learn::metrics_digest(out.reports));
  }
  const bool same = digests[0] == digests[1] && digests[1] == digests[2];
  const double t = seconds_since(t0);
  return {same && t < 300.0, "digests " + digests[0] + " " + digests[1] + " " + digests[2] + ", " +
                                 fmt("%.1f s", t)};
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  const io::RunConfig defaults;
  const auto bc = learn::bc_train(demos(), defaults.bc_options());
  const auto held = learn::record_demonstrations(sim::Highway(env_config()), 20, kHeldOutSeed);
  const double train = learn::action_agreement(bc.params, bc.normalizer, demos());
  const double test = learn::action_agreement(bc.params, bc.normalizer, held);
  const double t = seconds_since(t0);
  return {test >= 0.95 && t < 300.0, "held-out agreement " + fmt("%.4f", test) + " (train " +
                                         fmt("%.4f", train) + "), " + fmt("%.1f s", t)};
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const auto& ex = expert_stats();
  double speed = 0.0, lanes = 0.0;
  std::string per_seed;
  for (auto seed : kSeeds) {
    const auto run = imitation_run(policy::PolicyKind::kTwoLayer, seed, 32, 2000);
    speed += run.final_stats.avg_speed / 3.0;
    lanes += run.final_stats.lane_changes / 3.0;
    per_seed += " [seed " + std::to_string(seed) + ": speed " + fmt("%.2f", run.final_stats.avg_speed) +
                ", lane changes " + fmt("%.2f", run.final_stats.lane_changes) + "]";
  }
  const double speed_ratio = speed / ex.avg_speed;
  const double lane_ratio = lanes / ex.lane_changes;
  const bool pass = speed_ratio >= 0.85 && lane_ratio >= 0.7 && lane_ratio <= 1.3;
  return {pass, "speed " + fmt("%.2f", speed) + " vs expert " + fmt("%.2f", ex.avg_speed) + " (" +
                    fmt("%.1f%%", 100.0 * speed_ratio) + "), lane changes " + fmt("%.2f", lanes) +
                    " vs expert " + fmt("%.2f", ex.lane_changes) + " (" +
                    fmt("%.1f%%", 100.0 * lane_ratio) + ")," + per_seed + ", " +
                    fmt("%.0f s", seconds_since(t0))};
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  std::vector<double> means;
  std::string detail;
  for (int n : {4, 16, 64}) {
    double mean = 0.0;
    for (auto seed : kSeeds) {
      const auto run = imitation_run(policy::PolicyKind::kTwoLayer, seed, n, 1000);
      // Converged value: average over the last 10% of iterations.
      double tail = 0.0;
      for (std::size_t i = 900; i < run.reports.size(); ++i) tail += run.reports[i].mean_reward;
      mean += tail / 100.0 / 3.0;
    }
    means.push_back(mean);
    detail += "N=" + std::to_string(n) + ": " + fmt("%.3f", mean) + "  ";
  }
  const double t = seconds_since(t0);
  const bool pass = means[0] < means[1] && means[1] < means[2] && t <= 2700.0;
  return {pass, detail + fmt("%.0f s", t)};
}

Outcome criterion8() {
  std::vector<double> two, one;
  for (auto seed : kSeeds) {
    two.push_back(imitation_run(policy::PolicyKind::kTwoLayer, seed, 32, 2000).final_stats.avg_speed);
    one.push_back(imitation_run(policy::PolicyKind::kLinear, seed, 32, 2000).final_stats.avg_speed);
  }
  const double m2 = median3(two);
  const double m1 = median3(one);
  return {m2 >= m1, "median speed two-layer " + fmt("%.2f", m2) + ", single-layer " + fmt("%.2f", m1)};
}

Outcome criterion9() {
  Rng rng(99);
  double worst_merge = 0.0, worst_mean = 0.0, worst_std = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + rng.below(40);
    const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const double offset = rng.uniform(-1e3, 1e3);
    auto batch = [&](std::size_t rows) {
      std::vector<double> b(rows * dim);
      for (auto& x : b) x = offset + scale * rng.normal();
      return b;
    };
    const auto a = batch(2 + rng.below(300));
    const auto b = batch(2 + rng.below(300));
    policy::RunningNormalizer left(dim), right(dim), whole(dim);
    left.update(a);
    right.update(b);
    std::vector<double> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    whole.update(ab);
    left.merge(right);
    for (std::size_t d = 0; d < dim; ++d) {
      const auto i = static_cast<Eigen::Index>(d);
      auto rel = [](double x, double y) {
        return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300});
      };
      worst_merge = std::max({worst_merge, rel(left.mean()[i], whole.mean()[i]),
                              rel(left.m2()[i], whole.m2()[i])});
    }
    // Whiten the concatenated batch with its own statistics.
    const std::size_t rows = ab.size() / dim;
    std::vector<long double> sum(dim, 0.0L), sq(dim, 0.0L);
    std::vector<double> w(ab.size());
    for (std::size_t r = 0; r < rows; ++r) {
      const auto x = whole.whiten(std::span<const double>(ab.data() + r * dim, dim));
      for (std::size_t d = 0; d < dim; ++d) w[r * dim + d] = x[static_cast<Eigen::Index>(d)];
    }
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t d = 0; d < dim; ++d) sum[d] += w[r * dim + d];
    }
    for (std::size_t d = 0; d < dim; ++d) {
      const long double m = sum[d] / rows;
      for (std::size_t r = 0; r < rows; ++r) sq[d] += (w[r * dim + d] - m) * (w[r * dim + d] - m);
      worst_mean = std::max(worst_mean, static_cast<double>(std::abs(m)));
      worst_std = std::max(worst_std, static_cast<double>(std::abs(std::sqrt(sq[d] / rows) - 1.0L)));
    }
  }
  return {worst_merge < 1e-10 && worst_mean < 1e-8 && worst_std < 1e-6,
          "merge relative error " + fmt("%.2e", worst_merge) + ", whitened |mean| " +
              fmt("%.2e", worst_mean) + ", |std - 1| " + fmt("%.2e", worst_std)};
}

Outcome criterion10() {
  const fs::path dir = fs::path("acceptance_cache") / "roundtrip";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // Checkpoint with a discriminator section.
  const auto bc = bc_init(policy::PolicyKind::kTwoLayer, 1);
  io::Checkpoint ck{bc.params, bc.normalizer,
                    learn::initial_discriminator(147, 5, 64, 1), {}};
  ck.meta.config_digest = io::config_digest(env_config());
  ck.meta.iteration = 7;
  ck.meta.nu = 0.03;
  ck.meta.best_metric = -std::numeric_limits<double>::infinity();
  const auto c1 = (dir / "a.rckp").string();
  const auto c2 = (dir / "b.rckp").string();
  io::write_checkpoint(c1, ck);
  io::write_checkpoint(c2, io::read_checkpoint(c1));
  const bool ck_same = file_digest(c1) == file_digest(c2);

  const auto d1 = (dir / "a.rdem").string();
  const auto d2 = (dir / "b.rdem").string();
  io::write_demonstrations(d1, demos());
  io::write_demonstrations(d2, io::read_demonstrations(d1));
  const bool demo_same = file_digest(d1) == file_digest(d2);

  int rejected = 0, attempts = 0;
  auto expect_reject = [&](const std::string& bytes, bool checkpoint) {
    ++attempts;
    try {
      if (checkpoint) {
        io::decode_checkpoint(bytes);
      } else {
        io::decode_demonstrations(bytes);
      }
    } catch (const FormatError&) {
      ++rejected;
    }
  };
  auto set_u32 = [](std::string b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[at + static_cast<std::size_t>(i)] = static_cast<char>(v >> (8 * i));
    return b;
  };
  for (bool checkpoint : {true, false}) {
    const std::string good = io::read_file(checkpoint ? c1 : d1);
    for (std::size_t i = 0; i < 5; ++i) {
      std::string b = good;
      b[i] ^= 0x20;
      expect_reject(b, checkpoint);
    }
    for (std::uint32_t len : {0u, 1u, 2u, 0xffffu, 0xffffffffu}) expect_reject(set_u32(good, 5, len), checkpoint);
    expect_reject(good.substr(0, good.size() - 1), checkpoint);
    expect_reject(good + '\0', checkpoint);
  }
  return {ck_same && demo_same && rejected == attempts,
          std::string("checkpoint digests ") + (ck_same ? "identical" : "differ") +
              ", demonstration digests " + (demo_same ? "identical" : "differ") + ", rejected " +
              std::to_string(rejected) + "/" + std::to_string(attempts) + " corrupted files"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  std::vector<int> selected;
  const std::string arg = argc > 1 ? argv[1] : "all";
  if (arg == "all") {
    for (const auto& [k, fn] : criteria) selected.push_back(k);
  } else {
    const int k = std::atoi(arg.c_str());
    if (!criteria.count(k)) {
      std::fprintf(stderr, "usage: %s <1-10 | all>\n", argv[0]);
      return 2;
    }
    selected.push_back(k);
  }
  int failed = 0;
  for (int k : selected) {
    Outcome o;
    try {
      o = criteria.at(k)();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d: %s - %s\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
