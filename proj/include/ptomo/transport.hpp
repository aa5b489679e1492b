#pragma once

// Transport of a frame matrix along ball chords:
//   dU/dt = P_xi f(x + t xi) U,  U(tau_minus) = identity,
// solved with fixed-step RK4, plus the derived data maps: exit data over ray
// bundles, the weighted linear (integral) solution, the linearized data
// Phi1^{-1} Phi2 - identity, the Wronskian line data, and the closed-form
// rotation solution for gradient cross fields.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ptomo/fields.hpp"
#include "ptomo/geometry.hpp"
#include "ptomo/linalg.hpp"
#include "ptomo/parallel.hpp"
#include "ptomo/tensor_ops.hpp"

namespace ptomo {

// Chords shorter than this are treated as grazing: U = identity.
inline constexpr double kGrazingChordLength = 1e-6;

struct TransportResult {
  std::vector<double> ts;  // step nodes, tau_minus .. tau_plus
  std::vector<CMat> us;    // U at each node (only exit value unless requested)
  CMat exit_value{3};

  const CMat& exit() const { return exit_value; }
};

namespace detail {
inline void check_finite(const CMat& m, double t) {
  if (!m.all_finite())
    throw std::runtime_error("field evaluation is not finite at chord parameter t = " +
                             std::to_string(t));
}
}  // namespace detail

// Default step: chord length / 2048.
inline double default_transport_step(const Ray& ray) {
  const double len = ray.length();
  return len > 0.0 ? len / 2048.0 : 1.0;
}

inline TransportResult solve_transport(const MatrixField& f, const Ray& ray, double step = 0.0,
                                       bool keep_trajectory = false) {
  const int n = f.dim();
  if (ray.xi.dim() != n) throw std::invalid_argument("field/ray dimension mismatch");
  TransportResult res;
  res.exit_value = CMat::identity(n);
  const double len = ray.length();
  if (len < kGrazingChordLength) {
    res.ts = {ray.tau_minus, ray.tau_plus};
    if (keep_trajectory) res.us = {res.exit_value, res.exit_value};
    return res;
  }
  if (step <= 0.0) step = default_transport_step(ray);
  const int nsteps = std::max(1, int(std::ceil(len / step)));
  const double h = len / nsteps;

  auto rhs_at = [&](double t) {
    const CMat m = f.eval(ray.point(t));
    detail::check_finite(m, t);
    return project_transverse(m, ray.xi);
  };

  CMat u = CMat::identity(n);
  if (keep_trajectory) {
    res.ts.reserve(static_cast<size_t>(nsteps) + 1);
    res.us.reserve(static_cast<size_t>(nsteps) + 1);
    res.ts.push_back(ray.tau_minus);
    res.us.push_back(u);
  }
  CMat a0 = rhs_at(ray.tau_minus);
  for (int s = 0; s < nsteps; ++s) {
    const double t = ray.tau_minus + s * h;
    const CMat amid = rhs_at(t + 0.5 * h);
    const CMat aend = rhs_at(t + h);
    const CMat k1 = a0 * u;
    const CMat k2 = amid * (u + (0.5 * h) * k1);
    const CMat k3 = amid * (u + (0.5 * h) * k2);
    const CMat k4 = aend * (u + h * k3);
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    a0 = aend;
    if (keep_trajectory) {
      res.ts.push_back(ray.tau_minus + (s + 1) * h);
      res.us.push_back(u);
    }
  }
  res.exit_value = u;
  if (!keep_trajectory) res.ts = {ray.tau_minus, ray.tau_plus};
  return res;
}

// One exit record per ray. Values of dimension value_dim (the matrix size for
// transport data, 1 for scalar line data).
struct BoundaryRecord {
  Ray ray;
  std::vector<cplx> value;  // value_dim^2 entries, row-major
  bool ok = true;
  std::string error;

  BoundaryRecord(const Ray& r, int value_dim) : ray(r) {
    value.assign(static_cast<size_t>(value_dim) * static_cast<size_t>(value_dim), cplx(0.0));
  }
  CMat matrix(int value_dim) const {
    CMat m(value_dim);
    for (int k = 0; k < value_dim * value_dim; ++k) m.data()[k] = value[static_cast<size_t>(k)];
    return m;
  }
  void set_matrix(const CMat& m) {
    for (int k = 0; k < m.dim() * m.dim(); ++k) value[static_cast<size_t>(k)] = m.data()[k];
  }
};

struct BoundaryDataSet {
  int value_dim = 3;        // dimension of the per-ray matrix value (1 = scalar)
  int space_dim = 3;        // ambient dimension of the rays
  std::string field_id;     // free-form provenance tag
  std::string kind = "transport";  // transport | linearized | wronskian
  double step = 0.0;        // integration step used to produce the data
  std::vector<BoundaryRecord> records;

  std::size_t failed_count() const {
    std::size_t c = 0;
    for (const auto& r : records)
      if (!r.ok) ++c;
    return c;
  }
};

inline BoundaryDataSet forward_data(const MatrixField& f, const std::vector<Ray>& rays,
                                    double step = 0.0, int threads = 1,
                                    const std::string& field_id = "") {
  BoundaryDataSet out;
  out.value_dim = f.dim();
  out.space_dim = rays.empty() ? 3 : rays.front().x.dim();
  out.field_id = field_id;
  out.kind = "transport";
  out.step = step;
  out.records.reserve(rays.size());
  for (const Ray& r : rays) out.records.emplace_back(r, f.dim());
  parallel_for(rays.size(), threads, [&](std::size_t i) {
    BoundaryRecord& rec = out.records[i];
    try {
      rec.set_matrix(solve_transport(f, rec.ray, step).exit());
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });
  return out;
}

// Weighted linear data by composite Simpson quadrature of the explicit
// integral u(tau_plus) = int p(x,xi) [P_xi f] q(x,xi) dt along the chord.
inline CMat solve_weighted_linear(const MatrixField& f, const WeightField& p, const WeightField& q,
                                  const Ray& ray, double step = 0.0) {
  const int n = f.dim();
  CMat acc(n);
  const double len = ray.length();
  if (len < kGrazingChordLength) return acc;
  if (step <= 0.0) step = default_transport_step(ray);
  int nint = std::max(2, int(std::ceil(len / step)));
  if (nint % 2) ++nint;  // Simpson needs an even interval count
  const double h = len / nint;
  const bool unit_p = p.is_unit(), unit_q = q.is_unit();
  for (int k = 0; k <= nint; ++k) {
    const double t = ray.tau_minus + k * h;
    const Vec x = ray.point(t);
    CMat m = f.eval(x);
    detail::check_finite(m, t);
    m = project_transverse(m, ray.xi);
    if (!unit_p) m = p.eval(x, ray.xi) * m;
    if (!unit_q) m = m * q.eval(x, ray.xi);
    const double w = (k == 0 || k == nint) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += (w * h / 3.0) * m;
  }
  return acc;
}

// Linearized data F = Phi1^{-1} Phi2 - identity, ray by ray. Rays of the two
// sets must coincide. A singular Phi1 marks the record failed and stores a
// conditioning estimate in the error text.
inline BoundaryDataSet linearized_data(const BoundaryDataSet& phi1, const BoundaryDataSet& phi2) {
  if (phi1.value_dim != phi2.value_dim || phi1.records.size() != phi2.records.size())
    throw std::invalid_argument("linearized_data: data sets are not aligned");
  const int n = phi1.value_dim;
  BoundaryDataSet out;
  out.value_dim = n;
  out.space_dim = phi1.space_dim;
  out.field_id = phi1.field_id + "|" + phi2.field_id;
  out.kind = "linearized";
  out.step = phi1.step;
  out.records.reserve(phi1.records.size());
  const CMat eye = CMat::identity(n);
  for (std::size_t i = 0; i < phi1.records.size(); ++i) {
    const BoundaryRecord& r1 = phi1.records[i];
    const BoundaryRecord& r2 = phi2.records[i];
    BoundaryRecord rec(r1.ray, n);
    if (!r1.ok || !r2.ok) {
      rec.ok = false;
      rec.error = !r1.ok ? r1.error : r2.error;
    } else {
      try {
        double cond = 0.0;
        const CMat inv1 = inverse(r1.matrix(n), &cond);
        rec.set_matrix(inv1 * r2.matrix(n) - eye);
      } catch (const std::exception& e) {
        double cond = 0.0;
        try {
          (void)inverse(r1.matrix(n), &cond, 0.0);
        } catch (...) {
        }
        rec.ok = false;
        rec.error = std::string(e.what()) + " (condition estimate " + std::to_string(cond) + ")";
      }
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

// Wronskian line data S[f] = int tr(P_xi f) dt by composite Simpson.
inline cplx wronskian_data(const MatrixField& f, const Ray& ray, double step = 0.0) {
  const double len = ray.length();
  if (len < kGrazingChordLength) return cplx(0.0);
  if (step <= 0.0) step = default_transport_step(ray);
  int nint = std::max(2, int(std::ceil(len / step)));
  if (nint % 2) ++nint;
  const double h = len / nint;
  cplx acc = 0.0;
  for (int k = 0; k <= nint; ++k) {
    const double t = ray.tau_minus + k * h;
    const Vec x = ray.point(t);
    const CMat m = f.eval(x);
    detail::check_finite(m, t);
    // tr(pi f pi) = tr f - <f xi, xi>
    cplx s = m.trace();
    for (int i = 0; i < f.dim(); ++i)
      for (int j = 0; j < f.dim(); ++j) s -= ray.xi[i] * m(i, j) * ray.xi[j];
    const double w = (k == 0 || k == nint) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += (w * h / 3.0) * s;
  }
  return acc;
}

inline BoundaryDataSet wronskian_data(const MatrixField& f, const std::vector<Ray>& rays,
                                      double step = 0.0, int threads = 1,
                                      const std::string& field_id = "") {
  BoundaryDataSet out;
  out.value_dim = 1;
  out.space_dim = rays.empty() ? 3 : rays.front().x.dim();
  out.field_id = field_id;
  out.kind = "wronskian";
  out.step = step;
  out.records.reserve(rays.size());
  for (const Ray& r : rays) out.records.emplace_back(r, 1);
  parallel_for(rays.size(), threads, [&](std::size_t i) {
    BoundaryRecord& rec = out.records[i];
    try {
      rec.value[0] = wronskian_data(f, rec.ray, step);
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });
  return out;
}

// Closed-form solution for f = L_{grad lambda}: the rotation about xi by the
// angle lambda(x), frame-free Rodrigues form
//   U = cos(lambda) I + (1 - cos(lambda)) xi xi^T + sin(lambda) L_xi.
// Solves the transport equation with identity entry data when lambda vanishes
// on the boundary.
inline CMat rotation_closed_form(double lambda, const UnitVec& xi) {
  if (xi.dim() != 3) throw std::invalid_argument("rotation_closed_form requires dimension 3");
  const double c = std::cos(lambda), s = std::sin(lambda);
  CMat u = cross_operator(xi.vec());
  u *= s;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) u(i, j) += (1.0 - c) * xi[i] * xi[j];
  for (int i = 0; i < 3; ++i) u(i, i) += c;
  return u;
}

inline CMat rotation_closed_form(const ScalarField& lambda, const Vec& x, const UnitVec& xi) {
  return rotation_closed_form(lambda.value(x), xi);
}

}  // namespace ptomo
