#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rail/io/checkpoint.hpp"
#include "rail/io/config.hpp"
#include "rail/learn/rail_trainer.hpp"
#include "rail/sim/evaluate.hpp"

namespace rail::io {

enum class Algo { kBc, kRail };

std::string to_string(Algo algo);
// Accepts "bc" and "rail"; throws ConfigError otherwise.
Algo parse_algo(const std::string& text);

struct TrainRequest {
  RunConfig config;
  Algo algo = Algo::kRail;
  std::optional<std::string> init_checkpoint;  // RAIL only
  bool resume = false;
  std::function<void(const std::string&)> log;  // progress lines, may be empty
};

struct TrainSummary {
  std::string run_dir;
  int iterations = 0;  // completed, including resumed ones
  std::string metrics_digest;
  std::string final_checkpoint;
};

// Run directory <output_dir>/<experiment>:
//   config.json              resolved configuration
//   metrics.csv              one row per RAIL iteration
//   bc_metrics.csv           BC summary
//   checkpoints/iter-N.rckp  every checkpoint_every RAIL iterations
//   final.rckp               trained policy (+ discriminator for RAIL)
//   halt/                    state dump when training hits a NaN
//   manifest.json            digests of every artifact, written last
// An existing run directory is replaced unless resume is set, in which case
// training continues from its newest checkpoint.
TrainSummary train_run(const TrainRequest& request);

struct VerifyReport {
  std::vector<std::string> problems;
  int artifacts_checked = 0;
  bool ok() const { return problems.empty(); }
};

// Recomputes every digest recorded in the manifest and checks that the
// configuration, metrics and checkpoints agree with each other.
VerifyReport verify_run(const std::string& run_dir);

// Parses metrics.csv back into reports; throws FormatError.
std::vector<learn::IterationReport> parse_metrics_csv(const std::string& text);

// Evaluates a checkpointed policy; throws ConfigError when its dimensions do
// not fit the environment.
sim::DrivingStats evaluate_checkpoint(const sim::HighwayConfig& env, const Checkpoint& checkpoint,
                                      int episodes, std::uint64_t seed);

}  // namespace rail::io
