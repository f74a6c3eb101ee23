#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rail/rail.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code(rail_status s) {
  switch (s) {
    case RAIL_OK: return kExitOk;
    case RAIL_ERR_ARGUMENT:
    case RAIL_ERR_CONFIG:
    case RAIL_ERR_DOMAIN:
    case RAIL_ERR_FORMAT:
    case RAIL_ERR_VERIFY: return kExitUsage;
    default: return kExitRuntime;
  }
}

int report(rail_status s, const char* context) {
  if (s != RAIL_OK) {
    std::fprintf(stderr, "rail %s: %s error: %s\n", context, rail_status_name(s), rail_last_error());
  }
  return exit_code(s);
}

// Owning wrappers for the C handles.
struct Config {
  rail_config* p = nullptr;
  ~Config() { rail_config_free(p); }
};
struct CheckpointHandle {
  rail_checkpoint* p = nullptr;
  ~CheckpointHandle() { rail_checkpoint_free(p); }
};

struct SeedError {
  std::string text;
};

// RAIL_SEED takes precedence over --seed.
std::optional<uint64_t> effective_seed(const std::optional<uint64_t>& flag) {
  if (const char* env = std::getenv("RAIL_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || env[0] == '-') throw SeedError{env};
    return static_cast<uint64_t>(v);
  }
  return flag;
}

rail_status load_config(const std::string& path, Config& out) {
  if (path.empty()) return rail_config_default(&out.p);
  return rail_config_load(path.c_str(), &out.p);
}

void log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

void print_problem(const char* problem, void*) { std::fprintf(stderr, "  %s\n", problem); }

std::string stats_csv(const rail_stats& s) {
  const size_t n = rail_stats_csv(&s, nullptr, 0);
  std::string text(n + 1, '\0');
  rail_stats_csv(&s, text.data(), text.size());
  text.resize(n);
  return text;
}

bool write_text(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) return false;
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  return std::fclose(f) == 0 && ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-search adversarial imitation learning on a highway simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("rail ") + rail_version());

  std::string config_path;
  std::optional<uint64_t> seed_flag;

  // gen-expert
  auto* gen = app.add_subcommand("gen-expert", "Record scripted-expert demonstrations (RDEM1)");
  int gen_episodes = 40;
  std::string gen_out;
  gen->add_option("--config", config_path, "Run or environment config (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--episodes", gen_episodes, "Collision-free episodes to record")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed_flag, "Recording seed (RAIL_SEED overrides)");
  gen->add_option("--out", gen_out, "Output demonstration file")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a policy into <output_dir>/<experiment>");
  std::string algo = "rail";
  std::optional<std::string> init_path;
  std::optional<int> workers;
  bool resume = false;
  std::optional<std::string> output_dir, experiment, demos_path;
  train->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--algo", algo, "bc or rail")->check(CLI::IsMember({"bc", "rail"}));
  train->add_option("--init", init_path, "Initial policy checkpoint (rail only)")
      ->check(CLI::ExistingFile);
  train->add_option("--workers", workers, "Rollout worker threads")->check(CLI::PositiveNumber);
  train->add_option("--seed", seed_flag, "Training seed (RAIL_SEED overrides)");
  train->add_flag("--resume", resume, "Continue from the newest checkpoint of the run");
  train->add_option("--output-dir", output_dir, "Override output_dir");
  train->add_option("--experiment", experiment, "Override the experiment name");
  train->add_option("--demos", demos_path, "Override the demonstration file")
      ->check(CLI::ExistingFile);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or the scripted expert");
  std::string eval_checkpoint;
  bool eval_expert = false;
  int eval_episodes = 16;
  std::string eval_out;
  eval->add_option("--config", config_path, "Run or environment config (JSON)")
      ->check(CLI::ExistingFile);
  auto* ck_opt = eval->add_option("--checkpoint", eval_checkpoint, "Policy checkpoint (RCKP1)")
                     ->check(CLI::ExistingFile);
  auto* ex_opt = eval->add_flag("--expert", eval_expert, "Evaluate the scripted expert");
  ck_opt->excludes(ex_opt);
  eval->add_option("--episodes", eval_episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed_flag, "Evaluation seed (RAIL_SEED overrides)");
  eval->add_option("--out", eval_out, "Also write the stats CSV here");

  // export-weights
  auto* exp = app.add_subcommand("export-weights", "Export a weight layer as CSV");
  std::string exp_checkpoint, exp_out, exp_hist, exp_reshape;
  std::size_t exp_layer = 0;
  exp->add_option("--checkpoint", exp_checkpoint, "Policy checkpoint (RCKP1)")
      ->required()
      ->check(CLI::ExistingFile);
  exp->add_option("--layer", exp_layer, "Layer index (0 = input layer)");
  exp->add_option("--reshape", exp_reshape, "Reshape to RxC (row-major element order)");
  exp->add_option("--out", exp_out, "Matrix CSV output")->required();
  exp->add_option("--histogram", exp_hist, "Histogram CSV output");

  // verify
  auto* ver = app.add_subcommand("verify", "Check every digest recorded in a run manifest");
  std::string run_dir;
  ver->add_option("run_dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::optional<uint64_t> seed;
  try {
    seed = effective_seed(seed_flag);
  } catch (const SeedError& e) {
    std::fprintf(stderr, "rail: RAIL_SEED must be a non-negative integer, got '%s'\n", e.text.c_str());
    return kExitUsage;
  }

  if (gen->parsed()) {
    Config cfg;
    if (auto s = load_config(config_path, cfg); s != RAIL_OK) return report(s, "gen-expert");
    rail_stats summary{};
    const auto s = rail_generate_demonstrations(cfg.p, gen_episodes, seed.value_or(0),
                                                gen_out.c_str(), &summary);
    if (s != RAIL_OK) return report(s, "gen-expert");
    const std::string csv = stats_csv(summary);
    if (!write_text(gen_out + ".csv", csv)) {
      std::fprintf(stderr, "rail gen-expert: cannot write %s.csv\n", gen_out.c_str());
      return kExitRuntime;
    }
    std::fputs(csv.c_str(), stdout);
    return kExitOk;
  }

  if (train->parsed()) {
    Config cfg;
    if (auto s = load_config(config_path, cfg); s != RAIL_OK) return report(s, "train");
    rail_status s = RAIL_OK;
    if (seed) s = rail_config_set_seed(cfg.p, *seed);
    if (s == RAIL_OK && workers) s = rail_config_set_workers(cfg.p, *workers);
    if (s == RAIL_OK && (output_dir || experiment)) {
      s = rail_config_set_output(cfg.p, output_dir ? output_dir->c_str() : nullptr,
                                 experiment ? experiment->c_str() : nullptr);
    }
    if (s == RAIL_OK && demos_path) s = rail_config_set_demos(cfg.p, demos_path->c_str());
    if (s != RAIL_OK) return report(s, "train");
    rail_train_options opts{algo.c_str(), init_path ? init_path->c_str() : nullptr, resume ? 1 : 0,
                            log_line, nullptr};
    rail_train_result result{};
    s = rail_train(cfg.p, &opts, &result);
    if (s != RAIL_OK) return report(s, "train");
    std::printf("run_dir=%s\niterations=%d\nmetrics_digest=%s\n", result.run_dir, result.iterations,
                result.metrics_digest);
    return kExitOk;
  }

  if (eval->parsed()) {
    if (eval_checkpoint.empty() && !eval_expert) {
      std::fprintf(stderr, "rail eval: one of --checkpoint or --expert is required\n");
      return kExitUsage;
    }
    Config cfg;
    if (auto s = load_config(config_path, cfg); s != RAIL_OK) return report(s, "eval");
    rail_stats stats{};
    rail_status s;
    if (eval_expert) {
      s = rail_evaluate_expert(cfg.p, eval_episodes, seed.value_or(0), &stats);
    } else {
      CheckpointHandle ck;
      s = rail_checkpoint_load(eval_checkpoint.c_str(), &ck.p);
      if (s == RAIL_OK) s = rail_evaluate_checkpoint(cfg.p, ck.p, eval_episodes, seed.value_or(0), &stats);
    }
    if (s != RAIL_OK) return report(s, "eval");
    const std::string csv = stats_csv(stats);
    if (!eval_out.empty() && !write_text(eval_out, csv)) {
      std::fprintf(stderr, "rail eval: cannot write %s\n", eval_out.c_str());
      return kExitRuntime;
    }
    std::fputs(csv.c_str(), stdout);
    return kExitOk;
  }

  if (exp->parsed()) {
    std::size_t rows = 0, cols = 0;
    if (!exp_reshape.empty()) {
      unsigned long long r = 0, c = 0;
      char tail = 0;
      if (std::sscanf(exp_reshape.c_str(), "%llux%llu%c", &r, &c, &tail) != 2 || r == 0 || c == 0) {
        std::fprintf(stderr, "rail export-weights: --reshape expects RxC, got '%s'\n", exp_reshape.c_str());
        return kExitUsage;
      }
      rows = r;
      cols = c;
    }
    CheckpointHandle ck;
    rail_status s = rail_checkpoint_load(exp_checkpoint.c_str(), &ck.p);
    if (s == RAIL_OK) {
      s = rail_export_weights(ck.p, exp_layer, rows, cols, exp_out.c_str(),
                              exp_hist.empty() ? nullptr : exp_hist.c_str());
    }
    return report(s, "export-weights");
  }

  if (ver->parsed()) {
    if (!std::filesystem::is_directory(run_dir)) {
      std::fprintf(stderr, "rail verify: '%s' is not a directory\n", run_dir.c_str());
      return kExitUsage;
    }
    int checked = 0;
    const rail_status s = rail_verify_run(run_dir.c_str(), print_problem, nullptr, &checked);
    if (s == RAIL_OK) std::printf("verified %d artifacts in %s\n", checked, run_dir.c_str());
    return report(s, "verify");
  }
  return kExitUsage;
}
