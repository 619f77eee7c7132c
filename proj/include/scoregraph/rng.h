/**
 * @file rng.h
 * @brief Counter-based, splittable random stream.
 *
 * Every draw is a pure function of (key, counter), so streams are reproducible
 * across platforms and can be split into independent child streams without
 * shared state. Bounded integers use rejection sampling; no
 * implementation-defined std distributions are involved.
 */

#pragma once

#include <cstdint>

namespace scoregraph {

class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed = 0) noexcept : key_(mix(seed ^ kSeedSalt)) {}

  /// Child stream identified by `stream`. Does not advance this stream.
  [[nodiscard]] constexpr Rng split(std::uint64_t stream) const noexcept {
    Rng child;
    child.key_ = mix(key_ ^ mix(stream + kGolden));
    return child;
  }

  constexpr std::uint64_t next_u64() noexcept { return mix(key_ + kGolden * ++counter_); }

  /// Uniform integer in [0, bound). bound must be > 0.
  constexpr std::uint64_t uniform(std::uint64_t bound) noexcept {
    // Reject the low partial bucket so every residue is equally likely.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform_real() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t draws() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x5C0E6A9F3D1B2C47ULL;

  // SplitMix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace scoregraph
