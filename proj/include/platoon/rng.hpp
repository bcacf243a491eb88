#pragma once

#include <cstdint>

namespace platoon {

/// xoshiro256++ seeded through splitmix64. Used instead of <random> engines so
/// that streams are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Inverse-CDF exponential draw, rate > 0.
  double exponential(double rate);

 private:
  std::uint64_t state_[4];
};

}  // namespace platoon
