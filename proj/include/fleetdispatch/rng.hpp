#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Portable deterministic randomness: SplitMix64 streams plus Box-Muller
// normals. Pure integer/IEEE arithmetic, so a seed produces identical draws
// on every platform.

namespace fleetdispatch {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return n ? next() % n : 0; }

  /// Standard normal via Box-Muller.
  double next_gaussian() {
    double u = next_double();
    while (u <= 0.0) u = next_double();
    const double v = next_double();
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(6.283185307179586476925286766559 * v);
  }

  /// Independent per-item stream derived from a base seed.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mix(seed ^ (0xA0761D6478BD642FULL +
                           index * 0xE7037ED1A0B428DBULL));
    mix.next();
    return mix;
  }

 private:
  std::uint64_t state_;
};

template <typename T>
void shuffle_portable(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace fleetdispatch
