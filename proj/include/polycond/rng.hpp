#pragma once

// Deterministic, platform-independent random streams. std::mt19937_64 is
// bit-reproducible by the standard; the distributions are hand-rolled because
// the standard library's are not.

#include <cmath>
#include <cstdint>
#include <random>

namespace polycond {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}
  RngStream(std::uint64_t master, std::uint64_t k1, std::uint64_t k2 = 0)
      : eng_(splitmix64(splitmix64(master ^ splitmix64(k1)) ^ splitmix64(~k2))) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in (0,1), never exactly 0
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = uniform(), v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    double c = std::cos(2.0 * M_PI * v), s = std::sin(2.0 * M_PI * v);
    spare_ = r * s;
    have_spare_ = true;
    return r * c;
  }

  double exponential() { return -std::log(uniform()); }

  // Marsaglia-Tsang, boosted for shape < 1
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace polycond
