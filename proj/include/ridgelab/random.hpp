#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace ridgelab {

/// Per-trial stream rule: trial k of a run seeded with `base` uses
/// `base ^ k`. The generator itself scrambles the seed with splitmix64 so
/// neighbouring seeds give unrelated streams.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial_index) noexcept {
  return base ^ trial_index;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// mt19937_64 (output fully specified by the standard) plus a hand-written
/// Box-Muller transform; std::normal_distribution is implementation-defined
/// and would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Circular complex normal with E|Z|^2 = 1 (each part has variance 1/2).
  std::complex<double> circular_normal() {
    constexpr double kHalfSqrt = 0.70710678118654752440;
    const double re = normal();
    const double im = normal();
    return {kHalfSqrt * re, kHalfSqrt * im};
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ridgelab
