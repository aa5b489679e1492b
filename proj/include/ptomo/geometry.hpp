#pragma once

// Ball domain, oriented chords, and seeded phase-space sampling.
// A Ray stores a base point x, a unit direction xi, and the parameter
// interval [tau_minus, tau_plus] on which x + t*xi stays inside the ball.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptomo/linalg.hpp"
#include "ptomo/rng.hpp"

namespace ptomo {

struct BallDomain {
  Vec center;
  double radius = 1.0;

  BallDomain() : center(3) {}
  BallDomain(const Vec& c, double r) : center(c), radius(r) {
    if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
  }
  static BallDomain unit(int n = 3) { return BallDomain(Vec(n), 1.0); }

  int dim() const { return center.dim(); }
  bool contains(const Vec& x, double slack = 0.0) const {
    return norm(x - center) <= radius + slack;
  }
};

struct Ray {
  Vec x;        // base point
  UnitVec xi;   // direction
  double tau_minus = 0.0;
  double tau_plus = 0.0;

  Ray(const Vec& base, const UnitVec& dir, double tm, double tp)
      : x(base), xi(dir), tau_minus(tm), tau_plus(tp) {}

  Vec point(double t) const { return x + t * xi.vec(); }
  double length() const { return tau_plus - tau_minus; }
};

struct ChordTimes {
  double tau_minus = 0.0;
  double tau_plus = 0.0;
};

// Entry/exit parameters of the line t -> x + t*xi through the ball.
// Requires the base point inside or on the ball (up to 1e-12 slack); a
// tangent line yields the degenerate chord tau_minus == tau_plus.
inline ChordTimes chord_times(const BallDomain& ball, const Vec& x, const UnitVec& xi) {
  if (x.dim() != ball.dim() || xi.dim() != ball.dim())
    throw std::invalid_argument("chord_times: dimension mismatch");
  const Vec d = x - ball.center;
  if (norm(d) > ball.radius + 1e-12)
    throw std::invalid_argument("chord_times: base point lies outside the ball");
  const double b = dot(d, xi.vec());
  double disc = ball.radius * ball.radius - dot(d, d) + b * b;
  if (disc < 0.0) disc = 0.0;  // roundoff at tangency
  const double s = std::sqrt(disc);
  return ChordTimes{-b - s, -b + s};
}

inline Ray chord_ray(const BallDomain& ball, const Vec& x, const UnitVec& xi) {
  const ChordTimes ct = chord_times(ball, x, xi);
  return Ray(x, xi, ct.tau_minus, ct.tau_plus);
}

// Seeded sample of the inward boundary bundle: base points uniform on the
// boundary sphere, directions uniform over the inward hemisphere (achieved
// by flipping a uniform sphere direction against the outward normal).
// Base points sit on the boundary, so tau_minus = 0 for every ray.
inline std::vector<Ray> sample_inward_boundary(const BallDomain& ball, int count,
                                               std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("sample count must be nonnegative");
  const int n = ball.dim();
  Rng rng(seed);
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    const UnitVec nu = rng.unit_sphere(n);  // outward normal at the sample
    const Vec x = ball.center + ball.radius * nu.vec();
    UnitVec xi = rng.unit_sphere(n);
    double c = dot(xi.vec(), nu.vec());
    if (c > 0.0) {
      xi = UnitVec::normalized(-1.0 * xi.vec());
      c = -c;
    }
    const double tp = -2.0 * ball.radius * c;  // exit parameter from the chord equation
    rays.emplace_back(x, xi, 0.0, tp);
  }
  return rays;
}

// Two orthonormal vectors spanning xi-perp in R^3, chosen stably.
inline std::pair<Vec, Vec> orthonormal_frame(const UnitVec& xi) {
  if (xi.dim() != 3) throw std::invalid_argument("orthonormal_frame requires dimension 3");
  // start from the coordinate axis least aligned with xi
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(xi[i]) < std::abs(xi[k])) k = i;
  Vec a(3);
  a[k] = 1.0;
  Vec e1 = a - dot(a, xi.vec()) * xi.vec();
  e1 *= 1.0 / norm(e1);
  const Vec e2 = cross(xi.vec(), e1);
  return {e1, e2};
}

struct TangentLine {
  Vec x;       // foot point, <x, xi> = 0
  UnitVec xi;  // line direction

  TangentLine(const Vec& base, const UnitVec& dir) : x(base), xi(dir) {}
};

// Seeded lines of the tangent bundle of S^2: direction uniform on the sphere,
// foot point uniform in the disk of the given radius inside xi-perp.
inline std::vector<TangentLine> tangent_bundle_lines(int count, double support_radius,
                                                     std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("sample count must be nonnegative");
  if (!(support_radius >= 0.0)) throw std::invalid_argument("support radius must be nonnegative");
  Rng rng(seed);
  std::vector<TangentLine> lines;
  lines.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    const UnitVec xi = rng.unit_sphere(3);
    const auto [e1, e2] = orthonormal_frame(xi);
    const double r = support_radius * std::sqrt(rng.uniform());
    const double phi = rng.uniform(0.0, 6.283185307179586476925286766559);
    const Vec x = r * std::cos(phi) * e1 + r * std::sin(phi) * e2;
    lines.emplace_back(x, xi);
  }
  return lines;
}

// CSV export: one row per ray, columns x1..xn, xi1..xn, tau_minus, tau_plus.
inline void write_rays_csv(const std::vector<Ray>& rays, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const int n = rays.empty() ? 3 : rays.front().x.dim();
  for (int i = 1; i <= n; ++i) out << "x" << i << ",";
  for (int i = 1; i <= n; ++i) out << "xi" << i << ",";
  out << "tau_minus,tau_plus\n";
  char buf[32];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    out << buf;
  };
  for (const Ray& r : rays) {
    for (int i = 0; i < n; ++i) put(r.x[i], ',');
    for (int i = 0; i < n; ++i) put(r.xi[i], ',');
    put(r.tau_minus, ',');
    put(r.tau_plus, '\n');
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace ptomo
