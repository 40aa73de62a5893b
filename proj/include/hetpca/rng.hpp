#pragma once

// Counter-based random streams. Every random quantity in a simulation is drawn
// from a stream whose seed is a pure function of
// (master_seed, trial, user, sample), so generation order and thread count
// never change the values.
//
// Seed derivation uses the SplitMix64 finalizer:
//   mix64(z): z ^= z >> 30; z *= 0xbf58476d1ce4e5b9;
//             z ^= z >> 27; z *= 0x94d049bb133111eb; z ^= z >> 31
//   derive(a, b, c, d) = mix64(mix64(mix64(mix64(a + G) ^ (b + G)) ^ (c + G)) ^ (d + G))
// with G = 0x9e3779b97f4a7c15. The stream itself is a SplitMix64 generator,
// normals come from the Marsaglia polar method.

#include <cmath>
#include <cstdint>
#include <limits>

namespace hetpca::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kNoIndex = std::numeric_limits<std::uint64_t>::max();

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive(std::uint64_t master, std::uint64_t trial = 0,
                               std::uint64_t user = kNoIndex,
                               std::uint64_t sample = kNoIndex) noexcept {
  std::uint64_t h = mix64(master + kGolden);
  h = mix64(h ^ (trial + kGolden));
  h = mix64(h ^ (user + kGolden));
  return mix64(h ^ (sample + kGolden));
}

/// SplitMix64 stream. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// +1 or -1 with equal probability.
  double rademacher() noexcept { return ((*this)() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Stream stream_for(std::uint64_t master, std::uint64_t trial = 0,
                         std::uint64_t user = kNoIndex,
                         std::uint64_t sample = kNoIndex) noexcept {
  return Stream(derive(master, trial, user, sample));
}

}  // namespace hetpca::rng
