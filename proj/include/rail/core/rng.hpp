#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace rail {

// SplitMix64 finalizer. Used for seed derivation and for expanding a 64-bit
// seed into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive hash of a sequence of integers into a single seed.
// derive_seed({run, iteration, k}) is the per-task seed used by the trainer.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

// xoshiro256** with explicit, platform-independent conversions to uniform and
// normal variates (53-bit mantissa uniforms; Box-Muller normals). Copyable, so
// it can be embedded in simulator state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t next() noexcept;
  // Uniform on [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  // Standard normal.
  double normal() noexcept;

  bool operator==(const Rng&) const = default;

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rail
