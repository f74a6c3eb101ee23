#pragma once

#include <string>
#include <string_view>

#include "rail/learn/demonstrations.hpp"
#include "rail/sim/evaluate.hpp"

namespace rail::io {

inline constexpr std::string_view kDemoMagic = "RDEM1";

// Layout: magic, u32 header length, JSON header {n, p, episodes, source,
// config_digest}, then per episode a u32 step count followed by that many
// (float32[n] state, u8 action) records. Little-endian throughout.
std::string encode_demonstrations(const learn::DemonstrationSet& demos);
// Throws FormatError on any structural problem.
learn::DemonstrationSet decode_demonstrations(std::string_view bytes);

void write_demonstrations(const std::string& path, const learn::DemonstrationSet& demos);
learn::DemonstrationSet read_demonstrations(const std::string& path);

// Episode averages of the recorded step metrics; zeros for episodes read
// back from a file (metrics are not stored).
sim::DrivingStats summarize_demonstrations(const learn::DemonstrationSet& demos);

}  // namespace rail::io
