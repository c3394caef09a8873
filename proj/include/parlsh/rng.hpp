#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace parlsh {

/// Pseudorandom generation used for every seeded component of the index.
///
/// Version 1 of the scheme:
///  - streams are keyed by `derive_seed(master, stream)`, a splitmix64 mix;
///  - the engine is `std::mt19937_64`, whose output sequence is fixed by the
///    C++ standard;
///  - uniforms take the top 53 bits of one engine draw;
///  - standard normals use the Box-Muller transform, caching the second value;
///  - bounded integers use rejection sampling on the full 64-bit draw.
///
/// The standard library distributions are deliberately not used because their
/// algorithms are implementation-defined, which would break index replay
/// across toolchains. Bump `kRngVersion` whenever any of the above changes.
inline constexpr std::uint32_t kRngVersion = 1;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace parlsh
