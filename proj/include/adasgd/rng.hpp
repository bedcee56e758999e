// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace adasgd {

/// xoshiro256** seeded through SplitMix64. Stream k is the base sequence
/// advanced by k calls of the 2^128 jump polynomial, so streams never overlap
/// in practice and every implementation that follows the reference
/// algorithms reproduces the same draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform integer in [0, bound) without modulo bias (Lemire's method).
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal draw (Marsaglia polar method).
  double normal();

  void jump();

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace adasgd
