#pragma once

// Quadrature rules over the unit sphere S^{n-1} for n in {3,4}.
// The product rules integrate all polynomials in the components of xi up to
// the requested total degree exactly:
//   n=3: Gauss-Legendre in cos(theta) x uniform azimuth,
//   n=4: Gauss-Chebyshev (second kind) in cos(chi) x the n=3 rule,
// using dS^3 = sin^2(chi) dchi dS^2 and the substitution u = cos(chi),
// sin^2(chi) dchi = sqrt(1-u^2) du.
// Weights sum to the full surface measure (4*pi resp. 2*pi^2).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptomo/linalg.hpp"
#include "ptomo/rng.hpp"

namespace ptomo {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double sphere_surface_measure(int n) {
  if (n == 3) return 4.0 * kPi;
  if (n == 4) return 2.0 * kPi * kPi;
  throw std::invalid_argument("sphere_surface_measure supports n in {3,4}");
}

struct SphereQuadrature {
  int n = 3;
  std::vector<Vec> nodes;      // unit vectors in R^n
  std::vector<double> weights;
  std::string tag;             // construction label, e.g. "product-deg8"

  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  // Seeds the accumulator from the first node so the result type picks up the
  // integrand's shape (e.g. matrix dimension) instead of a default value.
  template <class F>
  auto integrate(F&& f) const -> decltype(f(std::declval<const UnitVec&>()) * 1.0) {
    using R = decltype(f(std::declval<const UnitVec&>()) * 1.0);
    if (nodes.empty()) return R{};
    R acc = f(UnitVec(nodes[0])) * weights[0];
    for (size_t k = 1; k < nodes.size(); ++k) acc += f(UnitVec(nodes[k])) * weights[k];
    return acc;
  }
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
inline void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<size_t>(m), 0.0);
  w.assign(static_cast<size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[static_cast<size_t>(i)] = t;
    w[static_cast<size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace detail

// Product rule on S^{n-1}, exact for polynomials of total degree <= degree.
inline SphereQuadrature sphere_quadrature(int n, int degree = 8) {
  if (n != 3 && n != 4) throw std::invalid_argument("sphere_quadrature supports n in {3,4}");
  if (degree < 0) throw std::invalid_argument("quadrature degree must be nonnegative");
  const int m = degree / 2 + 1;   // Gauss points: exact through degree 2m-1 >= degree
  const int K = degree + 1;       // azimuth points: exact for frequencies < K

  std::vector<double> gx, gw;
  detail::gauss_legendre(m, gx, gw);

  SphereQuadrature s2;
  s2.n = 3;
  s2.tag = "product-deg" + std::to_string(degree);
  for (int i = 0; i < m; ++i) {
    const double u = gx[static_cast<size_t>(i)];
    const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
    for (int j = 0; j < K; ++j) {
      const double phi = 2.0 * kPi * (j + 0.5) / K;
      s2.nodes.push_back(Vec(r * std::cos(phi), r * std::sin(phi), u));
      s2.weights.push_back(gw[static_cast<size_t>(i)] * 2.0 * kPi / K);
    }
  }
  if (n == 3) return s2;

  // S^3: Gauss-Chebyshev second kind in u = cos(chi), weight sqrt(1-u^2).
  SphereQuadrature s3;
  s3.n = 4;
  s3.tag = s2.tag;
  const int m2 = degree / 2 + 1;
  for (int j = 1; j <= m2; ++j) {
    const double a = j * kPi / (m2 + 1);
    const double u = std::cos(a);
    const double wj = kPi / (m2 + 1) * std::sin(a) * std::sin(a);
    const double r = std::sin(a);
    for (size_t k = 0; k < s2.nodes.size(); ++k) {
      const Vec& o = s2.nodes[k];
      s3.nodes.push_back(Vec(u, r * o[0], r * o[1], r * o[2]));
      s3.weights.push_back(wj * s2.weights[k]);
    }
  }
  return s3;
}

// Monte-Carlo rule: uniform sphere points with equal weights summing to the
// surface measure. Used as an independent cross-check of the product rules.
inline SphereQuadrature sphere_quadrature_mc(int n, int count, std::uint64_t seed) {
  if (n != 3 && n != 4) throw std::invalid_argument("sphere_quadrature_mc supports n in {3,4}");
  if (count <= 0) throw std::invalid_argument("sample count must be positive");
  Rng rng(seed);
  SphereQuadrature q;
  q.n = n;
  q.tag = "monte-carlo-" + std::to_string(count);
  const double w = sphere_surface_measure(n) / count;
  for (int k = 0; k < count; ++k) {
    q.nodes.push_back(rng.unit_sphere(n).vec());
    q.weights.push_back(w);
  }
  return q;
}

}  // namespace ptomo
