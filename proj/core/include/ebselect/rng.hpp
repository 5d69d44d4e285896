#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

namespace ebselect {

/// Counter-friendly 64-bit generator (splitmix64). Streams are derived by
/// hashing (seed, coordinates), so a simulation grid can be evaluated in any
/// order, or in parallel, and still produce identical draws.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double next_double_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes exactly two words per call.
  double next_normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniform integer in [0, bound), bound > 0. Multiply-shift, no rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  h += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t double_bits(double x) {
  return std::bit_cast<std::uint64_t>(x);
}

/// Hash a master seed together with stream coordinates into a stream seed.
template <class... Words>
std::uint64_t derive_seed(std::uint64_t master, Words... words) {
  std::uint64_t h = hash_mix(0x6a09e667f3bcc909ull, master);
  ((h = hash_mix(h, static_cast<std::uint64_t>(words))), ...);
  return h;
}

}  // namespace ebselect
