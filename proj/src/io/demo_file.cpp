#include "rail/io/demo_file.hpp"

#include <json.hpp>

#include "binary.hpp"
#include "rail/core/error.hpp"
#include "rail/io/config.hpp"

namespace rail::io {

using nlohmann::json;

std::string encode_demonstrations(const learn::DemonstrationSet& demos) {
  demos.validate();
  json header{{"n", demos.state_dim},
              {"p", demos.action_count},
              {"episodes", demos.episodes.size()},
              {"source", demos.source},
              {"config_digest", demos.config_digest}};
  detail::Writer w;
  w.raw(kDemoMagic);
  w.block(header.dump());
  for (const auto& ep : demos.episodes) {
    w.u32(static_cast<std::uint32_t>(ep.size()));
    for (std::size_t t = 0; t < ep.size(); ++t) {
      for (double v : ep.state(t)) w.f32(v);
      w.u8(ep.actions[t]);
    }
  }
  return w.take();
}

learn::DemonstrationSet decode_demonstrations(std::string_view bytes) {
  detail::Reader r(bytes, "demonstrations");
  r.expect_magic(kDemoMagic);
  const std::string_view text = r.block("header");
  json h;
  try {
    h = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("demonstrations: header is not valid JSON (" + std::string(e.what()) + ")");
  }
  learn::DemonstrationSet demos;
  std::size_t episodes = 0;
  try {
    if (!h.is_object()) throw FormatError("demonstrations: header is not a JSON object");
    for (const char* key : {"n", "p", "episodes"}) {
      if (!h.contains(key) || !h[key].is_number_unsigned()) {
        throw FormatError(std::string("demonstrations: header field '") + key +
                          "' missing or not a non-negative integer");
      }
    }
    demos.state_dim = h["n"].get<std::size_t>();
    demos.action_count = h["p"].get<std::size_t>();
    episodes = h["episodes"].get<std::size_t>();
    demos.source = h.value("source", std::string());
    demos.config_digest = h.value("config_digest", std::string());
  } catch (const json::exception& e) {
    throw FormatError("demonstrations: bad header (" + std::string(e.what()) + ")");
  }
  if (demos.state_dim == 0 || demos.action_count == 0 || demos.action_count > 256 || episodes == 0) {
    throw FormatError("demonstrations: header has zero or out-of-range n, p or episodes");
  }
  const std::size_t record = demos.state_dim * 4 + 1;
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::uint32_t steps = r.u32("episode length");
    if (steps == 0) throw FormatError("demonstrations: episode " + std::to_string(e) + " is empty");
    r.need(static_cast<std::size_t>(steps) * record, "episode records");
    Trajectory ep;
    ep.state_dim = demos.state_dim;
    ep.states.reserve(steps * demos.state_dim);
    ep.actions.reserve(steps);
    for (std::uint32_t t = 0; t < steps; ++t) {
      for (std::size_t i = 0; i < demos.state_dim; ++i) ep.states.push_back(r.f32("state"));
      const std::uint8_t a = r.u8("action");
      if (a >= demos.action_count) {
        throw FormatError("demonstrations: action id " + std::to_string(a) + " >= p in episode " +
                          std::to_string(e));
      }
      ep.actions.push_back(a);
    }
    demos.episodes.push_back(std::move(ep));
  }
  r.finish();
  return demos;
}

void write_demonstrations(const std::string& path, const learn::DemonstrationSet& demos) {
  write_file_atomic(path, encode_demonstrations(demos));
}

learn::DemonstrationSet read_demonstrations(const std::string& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_demonstrations(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

sim::DrivingStats summarize_demonstrations(const learn::DemonstrationSet& demos) {
  sim::DrivingStats total;
  if (demos.episodes.empty()) return total;
  for (const auto& ep : demos.episodes) {
    if (ep.metrics.empty()) continue;
    double speed = 0.0;
    for (const auto& m : ep.metrics) {
      speed += m.speed;
      total.lane_changes += m.lane_change_completed ? 1.0 : 0.0;
      total.overtakes += m.overtakes;
      total.longitudinal_sum += m.longitudinal;
      total.lateral_sum += m.lateral;
    }
    total.avg_speed += speed / static_cast<double>(ep.metrics.size());
  }
  const double k = static_cast<double>(demos.episodes.size());
  total.avg_speed /= k;
  total.lane_changes /= k;
  total.overtakes /= k;
  total.longitudinal_sum /= k;
  total.lateral_sum /= k;
  return total;
}

}  // namespace rail::io
