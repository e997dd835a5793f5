#pragma once

#include <cstdint>

namespace powcal {

/// splitmix64 finaliser; bijective 64-bit mixing with full avalanche.
constexpr std::uint64_t hash_mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return hash_mix(a * 0x9E3779B97F4A7C15ull + hash_mix(b + 0x2545F4914F6CDD1Dull));
}

/// Uniform in the open interval (0,1) from 64 random bits.
constexpr double u01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Pure counter access: the value at (seed, stream, index) never depends on
/// how many draws happened elsewhere, so parallel and serial generation agree.
constexpr std::uint64_t noise_bits(std::uint64_t seed, std::uint64_t stream,
                                   std::int64_t index) {
  return hash_mix(hash_combine(hash_combine(seed, stream),
                               static_cast<std::uint64_t>(index)));
}

double normal_from_bits(std::uint64_t bits);

inline double uniform_at(std::uint64_t seed, std::uint64_t stream,
                         std::int64_t index) {
  return u01(noise_bits(seed, stream, index));
}

double normal_at(std::uint64_t seed, std::uint64_t stream, std::int64_t index);

/// Sequential convenience generator over the same counter stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(hash_combine(seed, stream)) {}

  std::uint64_t next_u64() {
    return hash_mix(key_ ^ (++ctr_ * 0x9E3779B97F4A7C15ull));
  }
  double uniform() { return u01(next_u64()); }
  double normal();
  /// Uniform on [0, n); modulo bias is negligible for n far below 2^64.
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace powcal
