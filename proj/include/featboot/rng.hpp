#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace featboot {

/// Seeded, stream-addressable random generator. Two instances constructed
/// with the same (seed, stream) produce identical draw sequences; distinct
/// streams derived from one seed are independent, so per-replicate work can
/// run in any order (or in parallel) without sequence coupling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::uint64_t s = splitmix(seed + 0x9e3779b97f4a7c15ULL);
    s = splitmix(s ^ splitmix(stream + 0xbf58476d1ce4e5b9ULL));
    gen_.seed(s);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  /// Derive a fresh stream from the base seed; independent of current state.
  Rng stream(std::uint64_t id) const { return Rng(seed_, id); }

  std::uint64_t next() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n <= 1 returns 0 without consuming a draw.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    // rejection to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (one value per call; transforms are
  /// hand-rolled so sequences do not depend on the platform's distribution
  /// implementations).
  double normal() {
    const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Gamma(shape, rate) via Marsaglia-Tsang; requires shape >= 1.
  double gamma(double shape, double rate) {
    if (shape < 1.0 || rate <= 0.0)
      throw std::invalid_argument("Rng::gamma: shape must be >= 1, rate > 0");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v / rate;
    }
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 gen_;
};

}  // namespace featboot
