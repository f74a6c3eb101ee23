#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rail {

// 64-bit FNV-1a. Content digests in run manifests and artifact headers are the
// 16-hex-digit rendering of this hash.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes) noexcept;
  void update(std::string_view text) noexcept;
  std::uint64_t value() const noexcept { return hash_; }
  std::string hex() const;

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string digest_hex(std::string_view bytes);
std::string file_digest(const std::string& path);

}  // namespace rail
