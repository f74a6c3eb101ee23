#include "rail/rail.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "rail/core/error.hpp"
#include "rail/io/checkpoint.hpp"
#include "rail/io/config.hpp"
#include "rail/io/demo_file.hpp"
#include "rail/io/export.hpp"
#include "rail/io/run.hpp"
#include "rail/learn/imitation.hpp"
#include "rail/sim/expert.hpp"

struct rail_config {
  rail::io::RunConfig config;
};

struct rail_env {
  explicit rail_env(rail::sim::HighwayConfig config) : highway(std::move(config)) {}

  rail::sim::Highway highway;
  rail::sim::HighwayState state;
  rail::sim::Observation observation;
  bool started = false;
};

struct rail_checkpoint {
  rail::io::Checkpoint checkpoint;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_scratch;

rail_status fail(rail_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, mapping exceptions to status codes and recording the message.
template <typename Fn>
rail_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const rail::ConfigError& e) {
    return fail(RAIL_ERR_CONFIG, e.what());
  } catch (const rail::DomainError& e) {
    return fail(RAIL_ERR_DOMAIN, e.what());
  } catch (const rail::StateError& e) {
    return fail(RAIL_ERR_STATE, e.what());
  } catch (const rail::FormatError& e) {
    return fail(RAIL_ERR_FORMAT, e.what());
  } catch (const rail::IoError& e) {
    return fail(RAIL_ERR_IO, e.what());
  } catch (const rail::EngineError& e) {
    return fail(RAIL_ERR_ENGINE, e.what());
  } catch (const rail::NumericalError& e) {
    return fail(RAIL_ERR_NUMERICAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RAIL_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(RAIL_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(RAIL_ERR_INTERNAL, e.what());
  }
}

#define RAIL_REQUIRE(cond, what) \
  if (!(cond)) return fail(RAIL_ERR_ARGUMENT, what)

void fill_stats(const rail::sim::DrivingStats& s, rail_stats* out) {
  out->avg_speed = s.avg_speed;
  out->lane_changes = s.lane_changes;
  out->overtakes = s.overtakes;
  out->longitudinal = s.longitudinal_sum;
  out->lateral = s.lateral_sum;
}

void copy_string(const std::string& s, char* buf, std::size_t size) {
  if (size == 0) return;
  const std::size_t n = std::min(s.size(), size - 1);
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* rail_last_error(void) { return g_last_error.c_str(); }

const char* rail_status_name(rail_status status) {
  switch (status) {
    case RAIL_OK: return "ok";
    case RAIL_ERR_ARGUMENT: return "argument";
    case RAIL_ERR_CONFIG: return "config";
    case RAIL_ERR_DOMAIN: return "domain";
    case RAIL_ERR_STATE: return "state";
    case RAIL_ERR_FORMAT: return "format";
    case RAIL_ERR_IO: return "io";
    case RAIL_ERR_ENGINE: return "engine";
    case RAIL_ERR_NUMERICAL: return "numerical";
    case RAIL_ERR_VERIFY: return "verify";
    case RAIL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* rail_version(void) { return "0.1.0"; }

size_t rail_stats_csv(const rail_stats* stats, char* buf, size_t size) {
  if (!stats) return 0;
  rail::sim::DrivingStats s{stats->avg_speed, stats->lane_changes, stats->overtakes,
                            stats->longitudinal, stats->lateral};
  const std::string text = rail::sim::driving_stats_csv(s);
  if (buf) copy_string(text, buf, size);
  return text.size();
}

rail_status rail_config_default(rail_config** out) {
  RAIL_REQUIRE(out, "out is null");
  return guarded([&] {
    *out = new rail_config{};
    return RAIL_OK;
  });
}

rail_status rail_config_load(const char* path, rail_config** out) {
  RAIL_REQUIRE(path && out, "path or out is null");
  return guarded([&] {
    *out = new rail_config{rail::io::load_run_config(path)};
    return RAIL_OK;
  });
}

rail_status rail_config_parse(const char* json_text, rail_config** out) {
  RAIL_REQUIRE(json_text && out, "json_text or out is null");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw rail::ConfigError("<root>", std::string("not valid JSON: ") + e.what());
    }
    rail::io::RunConfig c;
    if (rail::io::is_run_config(j)) {
      c = rail::io::run_config_from_json(j);
    } else {
      c.env = rail::io::highway_config_from_json(j);
    }
    *out = new rail_config{std::move(c)};
    return RAIL_OK;
  });
}

void rail_config_free(rail_config* config) { delete config; }

rail_status rail_config_set_seed(rail_config* config, uint64_t seed) {
  RAIL_REQUIRE(config, "config is null");
  config->config.rail.seed = seed;
  config->config.bc.seed = seed;
  return RAIL_OK;
}

rail_status rail_config_set_workers(rail_config* config, int workers) {
  RAIL_REQUIRE(config, "config is null");
  if (workers < 1) return fail(RAIL_ERR_CONFIG, "config field 'rail.workers': must be >= 1");
  config->config.rail.workers = workers;
  return RAIL_OK;
}

rail_status rail_config_set_output(rail_config* config, const char* output_dir,
                                   const char* experiment) {
  RAIL_REQUIRE(config, "config is null");
  if (output_dir) config->config.output_dir = output_dir;
  if (experiment) {
    const std::string e = experiment;
    if (e.empty() || e.find('/') != std::string::npos) {
      return fail(RAIL_ERR_CONFIG, "config field 'experiment': must be a non-empty name without '/'");
    }
    config->config.experiment = e;
  }
  return RAIL_OK;
}

rail_status rail_config_set_demos(rail_config* config, const char* path) {
  RAIL_REQUIRE(config && path, "config or path is null");
  config->config.demos = path;
  return RAIL_OK;
}

const char* rail_config_json(const rail_config* config) {
  if (!config) return "";
  g_scratch = rail::io::to_json(config->config).dump(2);
  return g_scratch.c_str();
}

rail_status rail_config_digest(const rail_config* config, char out[17]) {
  RAIL_REQUIRE(config && out, "config or out is null");
  return guarded([&] {
    copy_string(rail::io::config_digest(config->config), out, 17);
    return RAIL_OK;
  });
}

size_t rail_config_observation_size(const rail_config* config) {
  return config ? config->config.env.observation_size() : 0;
}

rail_status rail_env_create(const rail_config* config, rail_env** out) {
  RAIL_REQUIRE(config && out, "config or out is null");
  return guarded([&] {
    *out = new rail_env(config->config.env);
    return RAIL_OK;
  });
}

void rail_env_free(rail_env* env) { delete env; }

size_t rail_env_observation_size(const rail_env* env) {
  return env ? env->highway.observation_size() : 0;
}

rail_status rail_env_reset(rail_env* env, uint64_t seed, double* obs) {
  RAIL_REQUIRE(env, "env is null");
  return guarded([&] {
    auto [state, observation] = env->highway.reset(seed);
    env->state = std::move(state);
    env->observation = std::move(observation);
    env->started = true;
    if (obs) std::copy(env->observation.begin(), env->observation.end(), obs);
    return RAIL_OK;
  });
}

rail_status rail_env_step(rail_env* env, int action, double* obs, double* longitudinal,
                          double* lateral, int* terminated) {
  RAIL_REQUIRE(env, "env is null");
  if (!env->started) return fail(RAIL_ERR_STATE, "rail_env_step before rail_env_reset");
  return guarded([&] {
    auto [state, outcome] = env->highway.step(env->state, rail::sim::action_from_id(action));
    env->state = std::move(state);
    env->observation = std::move(outcome.observation);
    if (obs) std::copy(env->observation.begin(), env->observation.end(), obs);
    if (longitudinal) *longitudinal = outcome.longitudinal_reward;
    if (lateral) *lateral = outcome.lateral_reward;
    if (terminated) *terminated = outcome.terminated ? 1 : 0;
    return RAIL_OK;
  });
}

rail_status rail_env_expert_action(const rail_env* env, int* action) {
  RAIL_REQUIRE(env && action, "env or action is null");
  if (!env->started) return fail(RAIL_ERR_STATE, "rail_env_expert_action before rail_env_reset");
  return guarded([&] {
    *action = rail::sim::action_id(
        rail::sim::scripted_expert(env->observation, env->state, env->highway.config()));
    return RAIL_OK;
  });
}

rail_status rail_env_host(const rail_env* env, int* lane, double* speed) {
  RAIL_REQUIRE(env, "env is null");
  if (!env->started) return fail(RAIL_ERR_STATE, "rail_env_host before rail_env_reset");
  if (lane) *lane = env->state.host.lane_index;
  if (speed) *speed = env->state.host.speed;
  return RAIL_OK;
}

rail_status rail_generate_demonstrations(const rail_config* config, int episodes, uint64_t seed,
                                         const char* path, rail_stats* summary) {
  RAIL_REQUIRE(config && path, "config or path is null");
  if (episodes < 1) return fail(RAIL_ERR_CONFIG, "config field 'episodes': must be >= 1");
  return guarded([&] {
    const rail::sim::Highway env(config->config.env);
    auto demos = rail::learn::record_demonstrations(env, episodes, seed);
    demos.config_digest = rail::io::config_digest(config->config.env);
    rail::io::write_demonstrations(path, demos);
    if (summary) fill_stats(rail::io::summarize_demonstrations(demos), summary);
    return RAIL_OK;
  });
}

rail_status rail_demonstrations_info(const char* path, size_t* state_dim, size_t* action_count,
                                     size_t* episodes, size_t* steps) {
  RAIL_REQUIRE(path, "path is null");
  return guarded([&] {
    const auto demos = rail::io::read_demonstrations(path);
    if (state_dim) *state_dim = demos.state_dim;
    if (action_count) *action_count = demos.action_count;
    if (episodes) *episodes = demos.episodes.size();
    if (steps) *steps = demos.total_steps();
    return RAIL_OK;
  });
}

rail_status rail_train(const rail_config* config, const rail_train_options* options,
                       rail_train_result* result) {
  RAIL_REQUIRE(config && options, "config or options is null");
  return guarded([&] {
    rail::io::TrainRequest req;
    req.config = config->config;
    req.algo = rail::io::parse_algo(options->algo ? options->algo : "rail");
    if (options->init_checkpoint) req.init_checkpoint = options->init_checkpoint;
    req.resume = options->resume != 0;
    if (options->log) {
      req.log = [fn = options->log, user = options->log_user](const std::string& line) {
        fn(line.c_str(), user);
      };
    }
    const auto summary = rail::io::train_run(req);
    if (result) {
      result->iterations = summary.iterations;
      copy_string(summary.metrics_digest, result->metrics_digest, sizeof result->metrics_digest);
      copy_string(summary.run_dir, result->run_dir, sizeof result->run_dir);
    }
    return RAIL_OK;
  });
}

rail_status rail_checkpoint_load(const char* path, rail_checkpoint** out) {
  RAIL_REQUIRE(path && out, "path or out is null");
  return guarded([&] {
    *out = new rail_checkpoint{rail::io::read_checkpoint(path)};
    return RAIL_OK;
  });
}

void rail_checkpoint_free(rail_checkpoint* checkpoint) { delete checkpoint; }

rail_status rail_checkpoint_shape(const rail_checkpoint* checkpoint, int* kind, size_t* n,
                                  size_t* h, size_t* p, size_t* layers) {
  RAIL_REQUIRE(checkpoint, "checkpoint is null");
  const auto& params = checkpoint->checkpoint.policy;
  if (kind) *kind = params.kind == rail::policy::PolicyKind::kLinear ? 0 : 1;
  if (n) *n = params.state_dim();
  if (h) *h = params.hidden_dim();
  if (p) *p = params.action_dim();
  if (layers) *layers = params.layers.size();
  return RAIL_OK;
}

rail_status rail_checkpoint_layer_shape(const rail_checkpoint* checkpoint, size_t layer,
                                        size_t* rows, size_t* cols) {
  RAIL_REQUIRE(checkpoint, "checkpoint is null");
  const auto& layers = checkpoint->checkpoint.policy.layers;
  RAIL_REQUIRE(layer < layers.size(), "layer index out of range");
  if (rows) *rows = static_cast<size_t>(layers[layer].rows());
  if (cols) *cols = static_cast<size_t>(layers[layer].cols());
  return RAIL_OK;
}

rail_status rail_checkpoint_layer(const rail_checkpoint* checkpoint, size_t layer, double* out,
                                  size_t count) {
  RAIL_REQUIRE(checkpoint && out, "checkpoint or out is null");
  const auto& layers = checkpoint->checkpoint.policy.layers;
  RAIL_REQUIRE(layer < layers.size(), "layer index out of range");
  const auto& m = layers[layer];
  if (count != static_cast<size_t>(m.size())) {
    return fail(RAIL_ERR_DOMAIN, "count " + std::to_string(count) + " does not match " +
                                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) *out++ = m(r, c);
  }
  return RAIL_OK;
}

rail_status rail_checkpoint_act(const rail_checkpoint* checkpoint, const double* obs, size_t n,
                                int* action) {
  RAIL_REQUIRE(checkpoint && obs && action, "checkpoint, obs or action is null");
  const auto& ck = checkpoint->checkpoint;
  if (n != ck.policy.state_dim()) {
    return fail(RAIL_ERR_DOMAIN, "observation has " + std::to_string(n) + " values, policy expects " +
                                     std::to_string(ck.policy.state_dim()));
  }
  return guarded([&] {
    *action = rail::policy::policy_act(ck.policy, ck.normalizer, {obs, n});
    return RAIL_OK;
  });
}

rail_status rail_evaluate_checkpoint(const rail_config* config, const rail_checkpoint* checkpoint,
                                     int episodes, uint64_t seed, rail_stats* out) {
  RAIL_REQUIRE(config && checkpoint && out, "config, checkpoint or out is null");
  return guarded([&] {
    fill_stats(rail::io::evaluate_checkpoint(config->config.env, checkpoint->checkpoint, episodes, seed),
               out);
    return RAIL_OK;
  });
}

rail_status rail_evaluate_expert(const rail_config* config, int episodes, uint64_t seed,
                                 rail_stats* out) {
  RAIL_REQUIRE(config && out, "config or out is null");
  if (episodes < 1) return fail(RAIL_ERR_CONFIG, "config field 'episodes': must be >= 1");
  return guarded([&] {
    const rail::sim::Highway env(config->config.env);
    fill_stats(rail::sim::evaluate_policy(env, rail::sim::expert_policy(env.config()), episodes, seed),
               out);
    return RAIL_OK;
  });
}

rail_status rail_export_weights(const rail_checkpoint* checkpoint, size_t layer, size_t rows,
                                size_t cols, const char* matrix_path, const char* histogram_path) {
  RAIL_REQUIRE(checkpoint && matrix_path, "checkpoint or matrix_path is null");
  RAIL_REQUIRE((rows == 0) == (cols == 0), "rows and cols must both be zero or both positive");
  return guarded([&] {
    std::optional<std::pair<std::size_t, std::size_t>> shape;
    if (rows) shape = std::make_pair(rows, cols);
    const Eigen::MatrixXd m = rail::io::export_layer(checkpoint->checkpoint.policy, layer, shape);
    rail::io::write_file_atomic(matrix_path, rail::io::matrix_csv(m));
    if (histogram_path) rail::io::write_file_atomic(histogram_path, rail::io::histogram_csv(m));
    return RAIL_OK;
  });
}

rail_status rail_verify_run(const char* run_dir, rail_problem_fn on_problem, void* user,
                            int* artifacts_checked) {
  RAIL_REQUIRE(run_dir, "run_dir is null");
  return guarded([&] {
    const auto report = rail::io::verify_run(run_dir);
    if (artifacts_checked) *artifacts_checked = report.artifacts_checked;
    if (on_problem) {
      for (const auto& p : report.problems) on_problem(p.c_str(), user);
    }
    if (!report.ok()) {
      return fail(RAIL_ERR_VERIFY, std::to_string(report.problems.size()) + " problem(s) in " + run_dir);
    }
    return RAIL_OK;
  });
}

}  // extern "C"
