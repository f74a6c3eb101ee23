#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "rail/learn/bc.hpp"
#include "rail/learn/imitation.hpp"
#include "rail/learn/rail_trainer.hpp"
#include "rail/sim/highway.hpp"

namespace rail::io {

// All readers reject unknown keys and wrongly typed values with a ConfigError
// naming the dotted key path; missing keys keep their defaults.
sim::HighwayConfig highway_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const sim::HighwayConfig& c);

learn::RailConfig rail_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const learn::RailConfig& c);

struct BcSettings {
  int epochs = 1000;
  std::uint64_t seed = 0;
  double learning_rate = 1e-2;
  double weight_decay = 1e-4;
};

struct RunConfig {
  sim::HighwayConfig env;
  learn::RailConfig rail;
  learn::PolicySpec policy;
  BcSettings bc;
  learn::DiscriminatorTraining discriminator;
  std::string demos;           // resolved relative to the config file
  std::string output_dir = "runs";
  std::string experiment = "rail";
  int checkpoint_every = 50;

  learn::BcOptions bc_options() const;
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::json to_json(const RunConfig& c);

// True for documents with run-level keys (or empty); anything else is read
// as a bare environment config.
bool is_run_config(const nlohmann::json& j);

// Loads and validates a run config; a bare environment document yields the
// default run settings around that environment.
RunConfig load_run_config(const std::string& path);
// A bare environment document, or the "env" section of a run config.
sim::HighwayConfig load_highway_config(const std::string& path);

// Digest of the canonical JSON rendering (defaults filled in, keys sorted).
std::string config_digest(const sim::HighwayConfig& c);
std::string config_digest(const RunConfig& c);

std::string read_file(const std::string& path);
// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace rail::io
