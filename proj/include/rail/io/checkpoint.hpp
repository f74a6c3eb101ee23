#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rail/disc/discriminator.hpp"
#include "rail/policy/normalizer.hpp"
#include "rail/policy/policy.hpp"

namespace rail::io {

inline constexpr std::string_view kCheckpointMagic = "RCKP1";

// Training position stored with a checkpoint so a run can resume.
struct CheckpointMeta {
  std::string algo = "rail";
  std::string config_digest;
  int iteration = 0;
  double nu = 0.0;
  double best_metric = 0.0;  // -inf is stored as null
};

// Layout: magic, u32 header length, JSON header, float32 blobs
// (policy layers row-major, normalizer mean, normalizer m2), then optionally
// u32 sub-header length, JSON sub-header, float32 discriminator blobs
// (w1 row-major, b1, w2, b2). All integers and floats are little-endian.
struct Checkpoint {
  policy::PolicyParams policy;
  policy::RunningNormalizer normalizer;
  std::optional<disc::DiscriminatorParams> discriminator;
  CheckpointMeta meta;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
// Throws FormatError on a bad magic, malformed header, inconsistent shapes,
// truncation or trailing bytes.
Checkpoint decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace rail::io
