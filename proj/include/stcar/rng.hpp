#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stcar/error.hpp"

namespace stcar {

// splitmix64 step, used to mix seeds for derived streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream k derived from a base seed; replicates and chains each get their own
// stream so runs are reproducible independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
  return mix_seed(base ^ mix_seed(k + 1));
}

// Random draws built on mt19937_64 with explicit transforms, so output is
// identical across standard libraries (std::normal_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform on (0,1), never returning exactly 0 or 1
  double uniform() {
    const std::uint64_t u = gen_();
    return (static_cast<double>(u >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller, cosine branch only; two uniforms per draw.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang for shape >= 1, boost trick for shape < 1.
  double gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) throw_value("gamma: shape and scale must be > 0");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
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
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  // Inverse-Gamma(shape, scale) with density ~ x^{-shape-1} exp(-scale/x).
  double inverse_gamma(double shape, double scale) {
    return scale / gamma(shape, 1.0);
  }

  // Exact Poisson: Knuth's product method, chunked so it stays exact for
  // large means without underflow.
  long long poisson(double mean) {
    if (mean < 0.0) throw_value("poisson: mean must be >= 0");
    long long total = 0;
    while (mean > 30.0) {
      total += poisson_knuth(30.0);
      mean -= 30.0;
    }
    return total + poisson_knuth(mean);
  }

  std::uint64_t raw() { return gen_(); }

 private:
  long long poisson_knuth(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    long long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  std::mt19937_64 gen_;
};

}  // namespace stcar
