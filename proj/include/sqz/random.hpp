#pragma once

#include <array>
#include <cstdint>

namespace sqz {

/// xoshiro256** 1.0 (Blackman & Vigna), state seeded from a 64-bit value
/// through splitmix64. The algorithm is fixed so a seed reproduces the same
/// stream on every platform.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Standard normal variates by the Box-Muller transform on the raw 53-bit
/// uniform stream; both variates of each pair are used in order.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double operator()();

  /// Uniform on (0, 1].
  double uniform();

 private:
  Xoshiro256 rng_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sqz
