#pragma once

// Seeded sampling utilities. All distributions are generated from raw
// mt19937_64 output with fixed arithmetic, so a given seed reproduces the
// same byte-identical sequence on every run and platform.

#include <cmath>
#include <cstdint>
#include <random>

#include "ptomo/linalg.hpp"

namespace ptomo {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (one value per call, no cached state).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Uniform on the unit sphere S^{n-1}, n in {3,4}.
  UnitVec unit_sphere(int n) {
    Vec v(n);
    double r2 = 0.0;
    do {
      r2 = 0.0;
      for (int i = 0; i < n; ++i) {
        v[i] = normal();
        r2 += v[i] * v[i];
      }
    } while (r2 < 1e-24);
    return UnitVec::normalized(v);
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ptomo
