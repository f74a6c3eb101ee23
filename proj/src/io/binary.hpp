#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "rail/core/error.hpp"

namespace rail::io::detail {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

class Writer {
 public:
  void raw(std::string_view bytes) { out_.append(bytes); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { append(&v, sizeof v); }
  void f32(double v) {
    const float f = static_cast<float>(v);
    append(&f, sizeof f);
  }
  void block(std::string_view json_text) {
    u32(static_cast<std::uint32_t>(json_text.size()));
    raw(json_text);
  }
  std::string take() { return std::move(out_); }

 private:
  void append(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  void expect_magic(std::string_view magic) {
    if (bytes_.substr(0, magic.size()) != magic) {
      throw FormatError(what_ + ": bad magic (expected " + std::string(magic) + ")");
    }
    pos_ = magic.size();
  }
  std::string_view raw(std::size_t n, const char* field) {
    need(n, field);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(const char* field) { return static_cast<std::uint8_t>(raw(1, field)[0]); }
  std::uint32_t u32(const char* field) {
    std::uint32_t v;
    std::memcpy(&v, raw(sizeof v, field).data(), sizeof v);
    return v;
  }
  double f32(const char* field) {
    float f;
    std::memcpy(&f, raw(sizeof f, field).data(), sizeof f);
    return f;
  }
  std::string_view block(const char* field) {
    const std::uint32_t n = u32(field);
    return raw(n, field);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n, const char* field) const {
    if (remaining() < n) {
      throw FormatError(what_ + ": truncated while reading " + field + " (need " + std::to_string(n) +
                        " bytes at offset " + std::to_string(pos_) + ", have " +
                        std::to_string(remaining()) + ")");
    }
  }
  void finish() const {
    if (remaining() != 0) {
      throw FormatError(what_ + ": " + std::to_string(remaining()) + " trailing bytes");
    }
  }
  const std::string& what() const { return what_; }

 private:
  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace rail::io::detail
