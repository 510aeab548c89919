#pragma once
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace mla {

// SplitMix64: tiny splittable counter-style generator. Streams seeded with
// nearby values (seed ^ sample_index) are statistically independent, which
// is what makes per-sample seeding safe for parallel Monte Carlo.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1]; never returns 0 so log() below is safe.
  double uniform01() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + static_cast<double>(next() >> 11) * 0x1.0p-53 * (hi - lo);
  }

  // Box-Muller pair of independent standard normals. Hand-rolled so results
  // are identical across standard libraries.
  std::pair<double, double> normal_pair() {
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }
};

}  // namespace mla
