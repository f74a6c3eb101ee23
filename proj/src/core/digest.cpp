#include "rail/core/digest.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "rail/core/error.hpp"

namespace rail {

void Fnv1a::update(std::span<const std::byte> bytes) noexcept {
  for (std::byte b : bytes) {
    hash_ ^= static_cast<std::uint64_t>(b);
    hash_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update(std::string_view text) noexcept {
  update(std::as_bytes(std::span(text.data(), text.size())));
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
  return buf;
}

std::string digest_hex(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.hex();
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for digest");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return digest_hex(bytes);
}

}  // namespace rail
