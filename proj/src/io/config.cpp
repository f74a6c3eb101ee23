#include "rail/io/config.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "rail/core/digest.hpp"
#include "rail/core/error.hpp"

namespace rail::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads fields of one JSON object and remembers which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError(key_path(key), "must be a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError(key_path(key), "must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_integer() && !it->is_number_unsigned()) {
            throw ConfigError(key_path(key), "must be non-negative");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError(key_path(key), "must be a string");
      }
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key_path(key), e.what());
    }
  }

  void bounds(const std::string& key, double& lo, double& hi) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      throw ConfigError(key_path(key), "must be a two-element numeric array [min, max]");
    }
    lo = (*it)[0].get<double>();
    hi = (*it)[1].get<double>();
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

sim::HighwayConfig highway_from(const json& j, const std::string& path) {
  sim::HighwayConfig c;
  ObjectReader r(j, path);
  r.get("lane_count", c.lane_count);
  r.get("lane_width", c.lane_width);
  r.get("road_length", c.road_length);
  r.get("ray_count", c.ray_count);
  r.get("max_range", c.max_range);
  r.get("frame_stack", c.frame_stack);
  r.get("decision_hz", c.decision_hz);
  r.get("vel_acc", c.vel_acc);
  r.get("vel_dec", c.vel_dec);
  r.bounds("host_speed_bounds", c.host_speed_min, c.host_speed_max);
  r.get("traffic_density", c.traffic_density);
  r.bounds("traffic_speed_bounds", c.traffic_speed_min, c.traffic_speed_max);
  r.get("episode_horizon", c.episode_horizon);
  r.get("seed", c.seed);
  r.get("vehicle_length", c.vehicle_length);
  r.get("vehicle_width", c.vehicle_width);
  r.get("lane_change_seconds", c.lane_change_seconds);
  r.get("min_headway", c.min_headway);
  if (const json* e = r.child("expert")) {
    ObjectReader er(*e, r.key_path("expert"));
    er.get("gap_open", c.expert.gap_open);
    er.get("gap_close", c.expert.gap_close);
    er.get("gap_safe", c.expert.gap_safe);
    er.get("rear_safe", c.expert.rear_safe);
    er.finish();
  }
  r.finish();
  c.validate();
  return c;
}

learn::RailConfig rail_from(const json& j, const std::string& path) {
  learn::RailConfig c;
  ObjectReader r(j, path);
  r.get("step_size", c.step_size);
  r.get("directions", c.directions);
  r.get("nu_init", c.nu_init);
  r.get("noise_increment", c.noise_increment);
  r.get("eval_period", c.eval_period);
  r.get("iterations", c.iterations);
  r.get("workers", c.workers);
  r.get("seed", c.seed);
  r.get("sigma_floor", c.sigma_floor);
  r.finish();
  c.validate();
  return c;
}

}  // namespace

sim::HighwayConfig highway_config_from_json(const json& j) { return highway_from(j, ""); }

json to_json(const sim::HighwayConfig& c) {
  return json{
      {"lane_count", c.lane_count},
      {"lane_width", c.lane_width},
      {"road_length", c.road_length},
      {"ray_count", c.ray_count},
      {"max_range", c.max_range},
      {"frame_stack", c.frame_stack},
      {"decision_hz", c.decision_hz},
      {"vel_acc", c.vel_acc},
      {"vel_dec", c.vel_dec},
      {"host_speed_bounds", {c.host_speed_min, c.host_speed_max}},
      {"traffic_density", c.traffic_density},
      {"traffic_speed_bounds", {c.traffic_speed_min, c.traffic_speed_max}},
      {"episode_horizon", c.episode_horizon},
      {"seed", c.seed},
      {"vehicle_length", c.vehicle_length},
      {"vehicle_width", c.vehicle_width},
      {"lane_change_seconds", c.lane_change_seconds},
      {"min_headway", c.min_headway},
      {"expert",
       {{"gap_open", c.expert.gap_open},
        {"gap_close", c.expert.gap_close},
        {"gap_safe", c.expert.gap_safe},
        {"rear_safe", c.expert.rear_safe}}},
  };
}

learn::RailConfig rail_config_from_json(const json& j) { return rail_from(j, ""); }

json to_json(const learn::RailConfig& c) {
  return json{{"step_size", c.step_size},   {"directions", c.directions},
              {"nu_init", c.nu_init},       {"noise_increment", c.noise_increment},
              {"eval_period", c.eval_period}, {"iterations", c.iterations},
              {"workers", c.workers},       {"seed", c.seed},
              {"sigma_floor", c.sigma_floor}};
}

learn::BcOptions RunConfig::bc_options() const {
  learn::BcOptions o;
  o.kind = policy.kind;
  o.hidden = policy.hidden;
  o.epochs = bc.epochs;
  o.seed = bc.seed;
  o.learning_rate = bc.learning_rate;
  o.weight_decay = bc.weight_decay;
  return o;
}

RunConfig run_config_from_json(const json& j, const std::string& base_dir) {
  RunConfig c;
  ObjectReader r(j, "");
  if (const json* e = r.child("env")) c.env = highway_from(*e, "env");
  if (const json* e = r.child("rail")) c.rail = rail_from(*e, "rail");
  if (const json* e = r.child("policy")) {
    ObjectReader pr(*e, "policy");
    std::string kind = policy::to_string(c.policy.kind);
    pr.get("kind", kind);
    try {
      c.policy.kind = policy::parse_policy_kind(kind);
    } catch (const DomainError& err) {
      throw ConfigError("policy.kind", err.what());
    }
    pr.get("hidden", c.policy.hidden);
    pr.finish();
    if (c.policy.kind == policy::PolicyKind::kTwoLayer && c.policy.hidden == 0) {
      throw ConfigError("policy.hidden", "must be > 0 for two_layer policies");
    }
  }
  if (const json* e = r.child("bc")) {
    ObjectReader br(*e, "bc");
    br.get("epochs", c.bc.epochs);
    br.get("seed", c.bc.seed);
    br.get("learning_rate", c.bc.learning_rate);
    br.get("weight_decay", c.bc.weight_decay);
    br.finish();
    if (c.bc.epochs < 0) throw ConfigError("bc.epochs", "must be >= 0");
    if (!(c.bc.learning_rate > 0.0)) throw ConfigError("bc.learning_rate", "must be > 0");
    if (!(c.bc.weight_decay >= 0.0)) throw ConfigError("bc.weight_decay", "must be >= 0");
  }
  if (const json* e = r.child("discriminator")) {
    ObjectReader dr(*e, "discriminator");
    dr.get("hidden", c.discriminator.hidden);
    dr.get("learning_rate", c.discriminator.learning_rate);
    dr.get("batch_size", c.discriminator.batch_size);
    dr.finish();
    if (c.discriminator.hidden == 0) throw ConfigError("discriminator.hidden", "must be > 0");
    if (!(c.discriminator.learning_rate > 0.0)) {
      throw ConfigError("discriminator.learning_rate", "must be > 0");
    }
    if (c.discriminator.batch_size < 2) throw ConfigError("discriminator.batch_size", "must be >= 2");
  }
  r.get("demos", c.demos);
  r.get("output_dir", c.output_dir);
  r.get("experiment", c.experiment);
  r.get("checkpoint_every", c.checkpoint_every);
  r.finish();
  if (c.checkpoint_every < 1) throw ConfigError("checkpoint_every", "must be >= 1");
  if (c.experiment.empty() || c.experiment.find('/') != std::string::npos) {
    throw ConfigError("experiment", "must be a non-empty name without '/'");
  }
  if (!c.demos.empty() && fs::path(c.demos).is_relative()) {
    c.demos = (fs::path(base_dir) / c.demos).lexically_normal().string();
  }
  if (!c.output_dir.empty() && fs::path(c.output_dir).is_relative()) {
    c.output_dir = (fs::path(base_dir) / c.output_dir).lexically_normal().string();
  }
  return c;
}

json to_json(const RunConfig& c) {
  return json{{"env", to_json(c.env)},
              {"rail", to_json(c.rail)},
              {"policy", {{"kind", policy::to_string(c.policy.kind)}, {"hidden", c.policy.hidden}}},
              {"bc",
               {{"epochs", c.bc.epochs},
                {"seed", c.bc.seed},
                {"learning_rate", c.bc.learning_rate},
                {"weight_decay", c.bc.weight_decay}}},
              {"discriminator",
               {{"hidden", c.discriminator.hidden},
                {"learning_rate", c.discriminator.learning_rate},
                {"batch_size", c.discriminator.batch_size}}},
              {"demos", c.demos},
              {"output_dir", c.output_dir},
              {"experiment", c.experiment},
              {"checkpoint_every", c.checkpoint_every}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

namespace {

json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

bool is_run_config(const json& j) {
  if (!j.is_object()) return false;
  for (const char* key : {"env", "rail", "policy", "bc", "discriminator", "demos", "output_dir",
                          "experiment", "checkpoint_every"}) {
    if (j.contains(key)) return true;
  }
  return j.empty();
}

RunConfig load_run_config(const std::string& path) {
  const json j = parse_json_file(path);
  const std::string base = fs::path(path).parent_path().string();
  if (!is_run_config(j)) {
    RunConfig c;
    c.env = highway_config_from_json(j);
    return c;
  }
  return run_config_from_json(j, base.empty() ? "." : base);
}

sim::HighwayConfig load_highway_config(const std::string& path) { return load_run_config(path).env; }

std::string config_digest(const sim::HighwayConfig& c) { return digest_hex(to_json(c).dump()); }

std::string config_digest(const RunConfig& c) {
  json j = to_json(c);
  // Paths depend on where the run is launched from, not on what it computes.
  j.erase("output_dir");
  j.erase("demos");
  // Results do not depend on the worker count.
  j["rail"].erase("workers");
  return digest_hex(j.dump());
}

}  // namespace rail::io
