#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace mcrt {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++ keyed by (seed, stream). Distinct streams are decorrelated by
// running the pair through splitmix64, so stream k of a run can be generated
// independently of streams 0..k-1. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
    sm = splitmix64(sm) ^ stream;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) {
    __uint128_t m = static_cast<__uint128_t>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<__uint128_t>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() { return normal_(*this); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Well-known stream ids so that independent draws made from one user seed
// never share a stream.
namespace stream {
inline constexpr std::uint64_t kPath = 0;
inline constexpr std::uint64_t kTheta = 1;
inline constexpr std::uint64_t kRoot = 2;
inline constexpr std::uint64_t kMark = 3;
inline constexpr std::uint64_t kTieBreakL = 4;
inline constexpr std::uint64_t kTieBreakR = 5;
inline constexpr std::uint64_t kWalk = 1000;
inline constexpr std::uint64_t kRejection = 1ULL << 32;
}  // namespace stream

}  // namespace mcrt
