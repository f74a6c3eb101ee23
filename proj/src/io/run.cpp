#include "rail/io/run.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "rail/core/digest.hpp"
#include "rail/core/error.hpp"
#include "rail/io/demo_file.hpp"
#include "rail/learn/bc.hpp"
#include "rail/learn/imitation.hpp"

namespace rail::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Algo algo) { return algo == Algo::kBc ? "bc" : "rail"; }

Algo parse_algo(const std::string& text) {
  if (text == "bc") return Algo::kBc;
  if (text == "rail") return Algo::kRail;
  throw ConfigError("algo", "expected 'bc' or 'rail', got '" + text + "'");
}

namespace {

constexpr const char* kToolVersion = "rail 0.1.0";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void say(const TrainRequest& req, const std::string& line) {
  if (req.log) req.log(line);
}

std::string checkpoint_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter-%06d.rckp", iteration);
  return buf;
}

// Newest readable checkpoint in dir/checkpoints, if any.
std::optional<Checkpoint> latest_checkpoint(const fs::path& dir) {
  std::map<int, fs::path> found;
  const fs::path ckdir = dir / "checkpoints";
  if (!fs::is_directory(ckdir)) return std::nullopt;
  for (const auto& e : fs::directory_iterator(ckdir)) {
    int it = 0;
    const std::string name = e.path().filename().string();
    if (std::sscanf(name.c_str(), "iter-%d.rckp", &it) == 1 && name == checkpoint_name(it)) {
      found[it] = e.path();
    }
  }
  for (auto it = found.rbegin(); it != found.rend(); ++it) {
    try {
      return read_checkpoint(it->second.string());
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

void prepare_fresh_dir(const fs::path& dir, const RunConfig& cfg) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir) || (!fs::exists(dir / "config.json") && !fs::is_empty(dir))) {
      throw ConfigError("output_dir", "'" + dir.string() + "' exists and is not a run directory");
    }
    fs::remove_all(dir);
  }
  fs::path tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "checkpoints");
  write_file_atomic((tmp / "config.json").string(), to_json(cfg).dump(2) + "\n");
  fs::rename(tmp, dir);
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, Algo algo, int iterations,
                    const std::string& metrics_digest_value, const std::string& started) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json artifacts = json::array();
  for (const auto& rel : files) {
    const fs::path p = dir / rel;
    artifacts.push_back({{"path", rel},
                         {"bytes", fs::file_size(p)},
                         {"digest", file_digest(p.string())}});
  }
  json m{{"tool_version", kToolVersion},
         {"algo", to_string(algo)},
         {"config_digest", config_digest(cfg)},
         {"metrics_digest", metrics_digest_value},
         {"iterations", iterations},
         {"seed", algo == Algo::kBc ? cfg.bc.seed : cfg.rail.seed},
         {"workers", cfg.rail.workers},
         {"started_utc", started},
         {"finished_utc", utc_now()},
         {"artifacts", artifacts}};
  write_file_atomic((dir / "manifest.json").string(), m.dump(2) + "\n");
}

learn::DemonstrationSet load_matching_demos(const RunConfig& cfg) {
  if (cfg.demos.empty()) throw ConfigError("demos", "a demonstration file is required for training");
  if (!fs::exists(cfg.demos)) throw ConfigError("demos", "file '" + cfg.demos + "' does not exist");
  learn::DemonstrationSet demos = read_demonstrations(cfg.demos);
  if (demos.state_dim != cfg.env.observation_size() || demos.action_count != sim::kActionCount) {
    throw ConfigError("demos", "recorded with n=" + std::to_string(demos.state_dim) +
                                   ", p=" + std::to_string(demos.action_count) +
                                   " but the environment needs n=" +
                                   std::to_string(cfg.env.observation_size()) + ", p=5");
  }
  const std::string env_digest = config_digest(cfg.env);
  if (!demos.config_digest.empty() && demos.config_digest != env_digest) {
    throw ConfigError("demos", "recorded under environment config " + demos.config_digest +
                                   " but this run uses " + env_digest);
  }
  return demos;
}

void check_policy_fits(const policy::PolicyParams& p, const RunConfig& cfg, const std::string& what) {
  const std::size_t n = cfg.env.observation_size();
  if (p.state_dim() != n || p.action_dim() != sim::kActionCount) {
    throw ConfigError(what, "policy has n=" + std::to_string(p.state_dim()) + ", p=" +
                                std::to_string(p.action_dim()) + " but the environment needs n=" +
                                std::to_string(n) + ", p=5");
  }
  if (p.kind != cfg.policy.kind ||
      (p.kind == policy::PolicyKind::kTwoLayer && p.hidden_dim() != cfg.policy.hidden)) {
    throw ConfigError(what, "policy is " + policy::to_string(p.kind) + " with h=" +
                                std::to_string(p.hidden_dim()) + " but the config asks for " +
                                policy::to_string(cfg.policy.kind) + " with h=" +
                                std::to_string(cfg.policy.hidden));
  }
}

TrainSummary train_bc(const TrainRequest& req, const fs::path& dir, const std::string& started) {
  const RunConfig& cfg = req.config;
  const learn::DemonstrationSet demos = load_matching_demos(cfg);
  prepare_fresh_dir(dir, cfg);
  say(req, "bc: " + std::to_string(demos.total_steps()) + " pairs, " + std::to_string(cfg.bc.epochs) +
               " epochs");
  const learn::BcResult r = learn::bc_train(demos, cfg.bc_options());
  const double agreement = learn::action_agreement(r.params, r.normalizer, demos);
  char row[128];
  std::snprintf(row, sizeof row, "%d,%.17g,%.17g\n", cfg.bc.epochs, r.final_loss, agreement);
  write_file_atomic((dir / "bc_metrics.csv").string(), std::string("epochs,final_loss,train_agreement\n") + row);

  Checkpoint ck{r.params, r.normalizer, std::nullopt, {}};
  ck.meta.algo = "bc";
  ck.meta.config_digest = config_digest(cfg);
  ck.meta.iteration = cfg.bc.epochs;
  const fs::path final_path = dir / "final.rckp";
  write_checkpoint(final_path.string(), ck);
  write_manifest(dir, cfg, Algo::kBc, 0, "", started);
  say(req, "bc: final loss " + std::to_string(r.final_loss) + ", train agreement " +
               std::to_string(agreement));
  return {dir.string(), 0, "", final_path.string()};
}

TrainSummary train_rail(const TrainRequest& req, const fs::path& dir, const std::string& started) {
  const RunConfig& cfg = req.config;
  const learn::DemonstrationSet demos = load_matching_demos(cfg);
  const std::string digest = config_digest(cfg);
  const sim::Highway env(cfg.env);
  const std::size_t n = env.observation_size();
  const std::size_t p = sim::kActionCount;

  std::optional<Checkpoint> resume_from;
  if (req.resume && fs::exists(dir / "config.json")) {
    const RunConfig previous =
        run_config_from_json(json::parse(read_file((dir / "config.json").string())), dir.string());
    if (config_digest(previous) != digest) {
      throw ConfigError("resume", "configuration differs from the run in '" + dir.string() + "'");
    }
    resume_from = latest_checkpoint(dir);
    fs::remove(dir / "manifest.json");
    fs::remove(dir / "final.rckp");
    fs::create_directories(dir / "checkpoints");
  } else {
    if (req.resume) say(req, "resume: no run found in " + dir.string() + ", starting fresh");
    prepare_fresh_dir(dir, cfg);
  }

  learn::RailState state;
  std::optional<Checkpoint> init;
  if (req.init_checkpoint) {
    init = read_checkpoint(*req.init_checkpoint);
    check_policy_fits(init->policy, cfg, "init");
  }
  state.schedule =
      policy::NoiseSchedule::make(cfg.rail.nu_init, cfg.rail.noise_increment, cfg.rail.eval_period);
  if (resume_from) {
    check_policy_fits(resume_from->policy, cfg, "resume");
    state.theta = resume_from->policy;
    state.normalizer = resume_from->normalizer;
    state.iteration = resume_from->meta.iteration;
    state.schedule.nu = resume_from->meta.nu;
    state.schedule.best_metric = resume_from->meta.best_metric;
  } else if (init) {
    state.theta = init->policy;
    state.normalizer = init->normalizer;
  } else {
    state.theta = policy::PolicyParams::zeros(cfg.policy.kind, n, cfg.policy.hidden, p);
    state.normalizer = policy::RunningNormalizer(n);
  }

  disc::DiscriminatorParams disc0 =
      learn::initial_discriminator(n, p, cfg.discriminator.hidden, cfg.rail.seed);
  if (resume_from) {
    if (!resume_from->discriminator || !resume_from->discriminator->same_shape(disc0)) {
      throw FormatError("resume checkpoint lacks a matching discriminator section");
    }
    disc0 = *resume_from->discriminator;
  }
  learn::HighwayImitation objective(env, demos, disc0, cfg.discriminator, cfg.rail.seed);

  // Keep metrics rows up to the resumed iteration.
  std::vector<learn::IterationReport> reports;
  const fs::path metrics_path = dir / "metrics.csv";
  if (resume_from && fs::exists(metrics_path)) {
    std::vector<learn::IterationReport> old;
    try {
      old = parse_metrics_csv(read_file(metrics_path.string()));
    } catch (const FormatError&) {
      // A kill can leave a partial last row; drop everything past it.
      std::istringstream in(read_file(metrics_path.string()));
      std::string line, good;
      while (std::getline(in, line)) {
        if (!in.eof()) good += line + "\n";
      }
      old = parse_metrics_csv(good);
    }
    for (const auto& r : old) {
      if (r.iteration <= state.iteration) reports.push_back(r);
    }
    if (static_cast<int>(reports.size()) != state.iteration) {
      throw FormatError("metrics.csv does not cover the resumed iteration " +
                        std::to_string(state.iteration));
    }
    say(req, "resume: continuing from iteration " + std::to_string(state.iteration));
  }
  {
    std::string text = std::string(learn::kMetricsHeader) + "\n";
    for (const auto& r : reports) text += learn::metrics_row(r) + "\n";
    write_file_atomic(metrics_path.string(), text);
  }
  std::ofstream metrics(metrics_path, std::ios::app);
  if (!metrics) throw IoError("cannot append to '" + metrics_path.string() + "'");

  auto snapshot = [&](const learn::RailState& s, const disc::DiscriminatorParams& d) {
    Checkpoint ck{s.theta, s.normalizer, d, {}};
    ck.meta.algo = "rail";
    ck.meta.config_digest = digest;
    ck.meta.iteration = s.iteration;
    ck.meta.nu = s.schedule.nu;
    ck.meta.best_metric = s.schedule.best_metric;
    return ck;
  };

  learn::RailTrainer trainer(cfg.rail, objective, std::move(state));
  trainer.on_halt([&](const learn::RailState& s, const std::string& reason) {
    fs::create_directories(dir / "halt");
    write_checkpoint((dir / "halt" / "state.rckp").string(), snapshot(s, objective.discriminator()));
    write_file_atomic((dir / "halt" / "reason.txt").string(), reason + "\n");
  });
  trainer.run([&](const learn::IterationReport& r, const learn::RailState& s) {
    reports.push_back(r);
    metrics << learn::metrics_row(r) << "\n" << std::flush;
    if (s.iteration % cfg.checkpoint_every == 0) {
      write_checkpoint((dir / "checkpoints" / checkpoint_name(s.iteration)).string(),
                       snapshot(s, objective.discriminator()));
    }
    if (s.iteration % cfg.rail.eval_period == 0 || s.iteration == cfg.rail.iterations) {
      char line[160];
      std::snprintf(line, sizeof line, "iter %d/%d mean_reward %.4f max_reward %.4f nu %.4f",
                    r.iteration, cfg.rail.iterations, r.mean_reward, r.max_reward, r.nu);
      say(req, line);
    }
  });
  metrics.close();

  const fs::path final_path = dir / "final.rckp";
  write_checkpoint(final_path.string(), snapshot(trainer.state(), objective.discriminator()));
  const std::string mdigest = learn::metrics_digest(reports);
  write_manifest(dir, cfg, Algo::kRail, trainer.state().iteration, mdigest, started);
  return {dir.string(), trainer.state().iteration, mdigest, final_path.string()};
}

}  // namespace

TrainSummary train_run(const TrainRequest& req) {
  req.config.env.validate();
  req.config.rail.validate();
  const std::string started = utc_now();
  const fs::path dir = fs::path(req.config.output_dir) / req.config.experiment;
  if (req.algo == Algo::kBc) {
    if (req.init_checkpoint) throw ConfigError("init", "only RAIL training accepts an initial checkpoint");
    return train_bc(req, dir, started);
  }
  return train_rail(req, dir, started);
}

std::vector<learn::IterationReport> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != learn::kMetricsHeader) {
    throw FormatError("metrics CSV must start with '" + std::string(learn::kMetricsHeader) + "'");
  }
  std::vector<learn::IterationReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    learn::IterationReport r;
    int used = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf%n", &r.iteration, &r.mean_reward,
                    &r.max_reward, &r.sigma_r, &r.disc_loss, &r.nu, &r.seconds, &used) != 7 ||
        static_cast<std::size_t>(used) != line.size()) {
      throw FormatError("malformed metrics row: '" + line + "'");
    }
    if (r.iteration != static_cast<int>(out.size()) + 1) {
      throw FormatError("metrics rows out of sequence at iteration " + std::to_string(r.iteration));
    }
    out.push_back(r);
  }
  return out;
}

VerifyReport verify_run(const std::string& run_dir) {
  VerifyReport rep;
  const fs::path dir(run_dir);
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    rep.problems.push_back("manifest.json missing (run incomplete or not a run directory)");
    return rep;
  }
  json m;
  try {
    m = json::parse(read_file(manifest_path.string()));
    if (!m.is_object() || !m.contains("artifacts") || !m["artifacts"].is_array() ||
        !m.contains("config_digest")) {
      throw FormatError("missing fields");
    }
  } catch (const std::exception& e) {
    rep.problems.push_back(std::string("manifest.json unreadable: ") + e.what());
    return rep;
  }
  const std::string cdigest = m.value("config_digest", "");

  std::vector<std::string> listed;
  for (const auto& a : m["artifacts"]) {
    const std::string rel = a.value("path", "");
    listed.push_back(rel);
    ++rep.artifacts_checked;
    const fs::path p = dir / rel;
    if (!fs::exists(p)) {
      rep.problems.push_back(rel + ": missing");
      continue;
    }
    const std::string actual = file_digest(p.string());
    if (actual != a.value("digest", "")) {
      rep.problems.push_back(rel + ": digest " + actual + " != manifest " + a.value("digest", ""));
    }
  }
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel != "manifest.json" && std::find(listed.begin(), listed.end(), rel) == listed.end()) {
      rep.problems.push_back(rel + ": not listed in the manifest");
    }
  }

  try {
    const RunConfig cfg =
        run_config_from_json(json::parse(read_file((dir / "config.json").string())), run_dir);
    if (config_digest(cfg) != cdigest) {
      rep.problems.push_back("config.json digest " + config_digest(cfg) + " != manifest " + cdigest);
    }
  } catch (const std::exception& e) {
    rep.problems.push_back(std::string("config.json: ") + e.what());
  }

  for (const auto& rel : listed) {
    if (fs::path(rel).extension() != ".rckp" || !fs::exists(dir / rel)) continue;
    try {
      const Checkpoint ck = read_checkpoint((dir / rel).string());
      if (ck.meta.config_digest != cdigest) {
        rep.problems.push_back(rel + ": config digest " + ck.meta.config_digest + " != manifest " + cdigest);
      }
      if (rel == "final.rckp" && m.value("algo", "") == "rail" &&
          ck.meta.iteration != m.value("iterations", -1)) {
        rep.problems.push_back("final.rckp: iteration " + std::to_string(ck.meta.iteration) +
                               " != manifest iterations");
      }
    } catch (const std::exception& e) {
      rep.problems.push_back(rel + ": " + e.what());
    }
  }

  if (m.value("algo", "") == "rail") {
    try {
      const auto reports = parse_metrics_csv(read_file((dir / "metrics.csv").string()));
      const std::string md = learn::metrics_digest(reports);
      if (md != m.value("metrics_digest", "")) {
        rep.problems.push_back("metrics.csv: metrics digest " + md + " != manifest " +
                               m.value("metrics_digest", ""));
      }
      if (static_cast<int>(reports.size()) != m.value("iterations", -1)) {
        rep.problems.push_back("metrics.csv: " + std::to_string(reports.size()) +
                               " rows != manifest iterations");
      }
    } catch (const std::exception& e) {
      rep.problems.push_back(std::string("metrics.csv: ") + e.what());
    }
  }
  return rep;
}

sim::DrivingStats evaluate_checkpoint(const sim::HighwayConfig& env, const Checkpoint& ck,
                                      int episodes, std::uint64_t seed) {
  if (ck.policy.state_dim() != env.observation_size() || ck.policy.action_dim() != sim::kActionCount) {
    throw ConfigError("checkpoint", "policy has n=" + std::to_string(ck.policy.state_dim()) +
                                        ", p=" + std::to_string(ck.policy.action_dim()) +
                                        " but the environment needs n=" +
                                        std::to_string(env.observation_size()) + ", p=5");
  }
  if (episodes < 1) throw ConfigError("episodes", "must be >= 1");
  const sim::Highway highway(env);
  return sim::evaluate_policy(highway, learn::as_driving_policy(ck.policy, ck.normalizer), episodes,
                              seed);
}

}  // namespace rail::io
