#pragma once

// Kernel characterization for the trace-transverse line data of symmetric
// fields. A compactly supported symmetric field produces vanishing data
// exactly when f - (tr f) I is an inner derivative, which in turn is
// equivalent to six second-order differential constraints R_1..R_6 on f
// (equivalently: the Saint-Venant operator annihilates f - (tr f) I).
// The first three constraints already decide membership for smooth fields;
// all six are evaluated and reported.
//
// Space side: R_i[f] built from exact second derivatives at sample points.
// Frequency side: the same constraints become algebraic systems R^_i in the
// transform g(xi), evaluated on a DFT grid; three algebraic identities tie
// R^_4..R^_6 to R^_1..R^_3 wherever the relating coordinate products are
// nonzero, which is why the reduced system is decisive away from the
// coordinate planes. Near those planes the reduced system loses rank, so all
// six residuals are always computed and reported side by side.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ptomo/fft.hpp"
#include "ptomo/fields.hpp"
#include "ptomo/gausspoly.hpp"
#include "ptomo/linalg.hpp"
#include "ptomo/tensor_ops.hpp"

namespace ptomo {

using GaussPolyVector = std::array<GaussPoly, 3>;

// Inner derivative (symmetrized gradient) of a vector potential:
// (dv)_ij = (dv_i/dx_j + dv_j/dx_i) / 2, exact on Gaussian-polynomial data.
inline GaussPolyMatrixField inner_derivative(const GaussPolyVector& v) {
  std::array<std::array<GaussPoly, 4>, 4> e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      GaussPoly g = v[static_cast<size_t>(i)].derivative(j);
      g += v[static_cast<size_t>(j)].derivative(i);
      e[static_cast<size_t>(i)][static_cast<size_t>(j)] = cplx(0.5) * g;
    }
  return GaussPolyMatrixField(3, SymmetryClass::Symmetric, e);
}

// Kernel member generated by a potential: the unique symmetric f with
// f - (tr f) I = dv, namely f = dv - (tr dv / 2) I.
inline GaussPolyMatrixField kernel_field_from_potential(const GaussPolyVector& v) {
  GaussPolyMatrixField dv = inner_derivative(v);
  GaussPoly tr;
  for (int i = 0; i < 3; ++i) tr += dv.entry(i, i);
  std::array<std::array<GaussPoly, 4>, 4> e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      e[static_cast<size_t>(i)][static_cast<size_t>(j)] = dv.entry(i, j);
      if (i == j) e[static_cast<size_t>(i)][static_cast<size_t>(j)] += cplx(-0.5) * tr;
    }
  GaussPolyMatrixField f(3, SymmetryClass::Symmetric, e);

  // construction check: f - (tr f) I - dv must vanish identically
  Rng rng(11);
  for (int k = 0; k < 8; ++k) {
    const Vec x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const CMat fm = f.eval(x);
    const CMat dvm = dv.eval(x);
    const cplx trf = fm.trace();
    double defect = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        defect = std::max(defect,
                          std::abs(fm(i, j) - (i == j ? trf : cplx(0.0)) - dvm(i, j)));
    if (defect > 1e-12 * std::max(1.0, fm.max_abs()))
      throw std::runtime_error("kernel_field_from_potential: defining identity violated");
  }
  return f;
}

// h = f - (tr f) I with exact derivatives preserved.
inline GaussPolyMatrixField subtract_trace(const GaussPolyMatrixField& f) {
  const int n = f.dim();
  GaussPoly tr;
  for (int i = 0; i < n; ++i) tr += f.entry(i, i);
  std::array<std::array<GaussPoly, 4>, 4> e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      e[static_cast<size_t>(i)][static_cast<size_t>(j)] = f.entry(i, j);
      if (i == j) e[static_cast<size_t>(i)][static_cast<size_t>(j)] += cplx(-1.0) * tr;
    }
  return GaussPolyMatrixField(n, f.symmetry(), e);
}

// Saint-Venant operator on a symmetric field h, the six independent
// components, with the 1/4 normalization:
//   (Rh)_ijkl = (h_ik;jl - h_jk;il - h_il;jk + h_jl;ik) / 4.
// Component order: 1212, 1313, 2323, 1213, 2123, 1323.
inline std::array<cplx, 6> saint_venant(const MatrixField& h, const Vec& x) {
  if (!h.has_derivatives()) throw std::invalid_argument("saint_venant needs second derivatives");
  auto d2 = [&](int a, int b, int c, int d) { return h.d2(x, c, d)(a, b); };
  auto comp = [&](int i, int j, int k, int l) {
    return 0.25 * (d2(i, k, j, l) - d2(j, k, i, l) - d2(i, l, j, k) + d2(j, l, i, k));
  };
  return {comp(0, 1, 0, 1), comp(0, 2, 0, 2), comp(1, 2, 1, 2),
          comp(0, 1, 0, 2), comp(1, 0, 1, 2), comp(0, 2, 1, 2)};
}

// The six second-order kernel constraints on f itself (h = f - (tr f) I
// already substituted). f_ab;cd denotes the second derivative of entry ab.
inline std::array<cplx, 6> kernel_constraints(const MatrixField& f, const Vec& x) {
  if (!f.has_derivatives())
    throw std::invalid_argument("kernel_constraints needs second derivatives");
  // cache the six distinct second-derivative matrices
  CMat d[3][3] = {{f.d2(x, 0, 0), f.d2(x, 0, 1), f.d2(x, 0, 2)},
                  {f.d2(x, 0, 1), f.d2(x, 1, 1), f.d2(x, 1, 2)},
                  {f.d2(x, 0, 2), f.d2(x, 1, 2), f.d2(x, 2, 2)}};
  auto t = [&](int a, int b, int c, int dd) { return d[c][dd](a, b); };
  std::array<cplx, 6> r;
  r[0] = t(0, 0, 0, 0) + 2.0 * t(0, 1, 0, 1) + t(1, 1, 1, 1) + t(2, 2, 0, 0) + t(2, 2, 1, 1);
  r[1] = t(0, 0, 0, 0) + 2.0 * t(0, 2, 0, 2) + t(1, 1, 0, 0) + t(1, 1, 2, 2) + t(2, 2, 2, 2);
  r[2] = t(0, 0, 1, 1) + t(0, 0, 2, 2) + 2.0 * t(1, 2, 1, 2) + t(1, 1, 1, 1) + t(2, 2, 2, 2);
  r[3] = t(0, 1, 0, 2) + t(0, 2, 0, 1) + t(1, 1, 1, 2) - t(1, 2, 0, 0) + t(2, 2, 1, 2);
  r[4] = t(0, 0, 0, 2) + t(0, 1, 1, 2) - t(0, 2, 1, 1) + t(1, 2, 0, 1) + t(2, 2, 0, 2);
  r[5] = t(0, 0, 0, 1) - t(0, 1, 2, 2) + t(0, 2, 1, 2) + t(1, 1, 0, 1) + t(1, 2, 0, 2);
  return r;
}

// Residuals of the six constraints over a point sample. scale is six times
// the largest second-derivative magnitude seen, the natural size of one
// constraint row; verdicts compare max residuals against tol * scale.
struct KernelResiduals {
  std::vector<Vec> points;
  std::vector<std::array<cplx, 6>> values;   // per point
  std::array<double, 6> max_abs{};           // per equation
  double scale = 0.0;
  double tolerance = 0.0;
  bool reduced_verdict = false;  // equations 1..3 below tol*scale
  bool full_verdict = false;     // all six below tol*scale
};

inline KernelResiduals kernel_residuals(const MatrixField& f, const std::vector<Vec>& points,
                                        double tolerance = 1e-10) {
  KernelResiduals out;
  out.points = points;
  out.tolerance = tolerance;
  out.values.reserve(points.size());
  for (const Vec& x : points) {
    const auto r = kernel_constraints(f, x);
    out.values.push_back(r);
    for (int e = 0; e < 6; ++e)
      out.max_abs[static_cast<size_t>(e)] =
          std::max(out.max_abs[static_cast<size_t>(e)], std::abs(r[static_cast<size_t>(e)]));
    double dmax = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) dmax = std::max(dmax, f.d2(x, a, b).max_abs());
    out.scale = std::max(out.scale, 6.0 * dmax);
  }
  const double bar = out.tolerance * out.scale;
  out.reduced_verdict = out.max_abs[0] <= bar && out.max_abs[1] <= bar && out.max_abs[2] <= bar;
  out.full_verdict = out.reduced_verdict && out.max_abs[3] <= bar && out.max_abs[4] <= bar &&
                     out.max_abs[5] <= bar;
  return out;
}

// Frequency-side residuals. The field is sampled on a cubic power-of-two
// grid, transformed with the convention
//   g(xi) = h^3 sum_k f(x_k) e^{-i <xi, x_k>},  xi = 2 pi m / L,
// and the six algebraic constraints are evaluated at every frequency node.
// scale is the grid maximum of |g(xi)|_F |xi|^2, the size of one constraint
// row at its most informative frequency.
struct FourierResiduals {
  int grid = 0;
  double box_half = 0.0;
  std::array<double, 6> max_abs{};
  double scale = 0.0;
  double tolerance = 0.0;
  bool reduced_verdict = false;
  bool full_verdict = false;
  double boundary_magnitude = 0.0;  // max |f| on the outermost grid shell
  double field_magnitude = 0.0;     // max |f| over the grid
  bool boundary_warning = false;    // support not well inside the box
};

namespace detail {

struct SymFreqComponents {
  // order: 11, 12, 13, 22, 23, 33
  std::array<std::vector<cplx>, 6> g;
  std::vector<double> freq;  // signed frequency per index
  std::size_t n = 0;
};

inline std::array<cplx, 6> constraint_symbols(const std::array<cplx, 6>& g, double x1, double x2,
                                              double x3) {
  const cplx g11 = g[0], g12 = g[1], g13 = g[2], g22 = g[3], g23 = g[4], g33 = g[5];
  std::array<cplx, 6> r;
  r[0] = x1 * x1 * g11 + 2.0 * x1 * x2 * g12 + x2 * x2 * g22 + (x1 * x1 + x2 * x2) * g33;
  r[1] = x1 * x1 * g11 + 2.0 * x1 * x3 * g13 + (x1 * x1 + x3 * x3) * g22 + x3 * x3 * g33;
  r[2] = (x2 * x2 + x3 * x3) * g11 + x2 * x2 * g22 + 2.0 * x2 * x3 * g23 + x3 * x3 * g33;
  r[3] = x1 * x3 * g12 + x1 * x2 * g13 + x2 * x3 * g22 - x1 * x1 * g23 + x2 * x3 * g33;
  r[4] = x1 * x3 * g11 + x2 * x3 * g12 - x2 * x2 * g13 + x1 * x2 * g23 + x1 * x3 * g33;
  r[5] = x1 * x2 * g11 - x3 * x3 * g12 + x2 * x3 * g13 + x1 * x2 * g22 + x1 * x3 * g23;
  return r;
}

}  // namespace detail

inline FourierResiduals fourier_residuals(const MatrixField& f, int grid, double box_half,
                                          double tolerance = 1e-6,
                                          double boundary_warn_ratio = 1e-9) {
  if (f.symmetry() != SymmetryClass::Symmetric)
    throw std::domain_error("fourier_residuals requires a field declared symmetric");
  if (f.dim() != 3) throw std::invalid_argument("fourier_residuals requires n = 3");
  const std::size_t n = static_cast<size_t>(grid);
  if (!is_power_of_two(n)) throw std::invalid_argument("grid size must be a power of two");
  if (!(box_half > 0.0)) throw std::invalid_argument("box half-width must be positive");

  FourierResiduals out;
  out.grid = grid;
  out.box_half = box_half;
  out.tolerance = tolerance;

  const double L = 2.0 * box_half;
  const double h = L / double(n);
  static const int II[6] = {0, 0, 0, 1, 1, 2};
  static const int JJ[6] = {0, 1, 2, 1, 2, 2};
  std::array<std::vector<cplx>, 6> comp;
  for (auto& c : comp) c.assign(n * n * n, cplx(0.0));

  for (std::size_t ix = 0; ix < n; ++ix)
    for (std::size_t iy = 0; iy < n; ++iy)
      for (std::size_t iz = 0; iz < n; ++iz) {
        const Vec x(-box_half + double(ix) * h, -box_half + double(iy) * h,
                    -box_half + double(iz) * h);
        const CMat m = f.eval(x);
        const std::size_t idx = (ix * n + iy) * n + iz;
        for (int c = 0; c < 6; ++c) comp[static_cast<size_t>(c)][idx] = m(II[c], JJ[c]);
        const double mag = m.max_abs();
        out.field_magnitude = std::max(out.field_magnitude, mag);
        if (ix == 0 || iy == 0 || iz == 0 || ix == n - 1 || iy == n - 1 || iz == n - 1)
          out.boundary_magnitude = std::max(out.boundary_magnitude, mag);
      }
  out.boundary_warning =
      out.boundary_magnitude > boundary_warn_ratio * std::max(out.field_magnitude, 1e-300);

  for (auto& c : comp) fft3_inplace(c, n);

  // signed frequencies and the phase factor for the box offset -box_half
  std::vector<double> freq(n);
  std::vector<cplx> phase(n);
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (std::size_t m = 0; m < n; ++m) {
    const double sm = (m < n / 2) ? double(m) : double(m) - double(n);
    freq[m] = two_pi * sm / L;
    phase[m] = std::exp(cplx(0.0, freq[m] * box_half));
  }
  const double vol_el = h * h * h;

  for (std::size_t ix = 0; ix < n; ++ix)
    for (std::size_t iy = 0; iy < n; ++iy)
      for (std::size_t iz = 0; iz < n; ++iz) {
        const std::size_t idx = (ix * n + iy) * n + iz;
        const cplx ph = vol_el * phase[ix] * phase[iy] * phase[iz];
        std::array<cplx, 6> g;
        double gnorm2 = 0.0;
        for (int c = 0; c < 6; ++c) {
          g[static_cast<size_t>(c)] = ph * comp[static_cast<size_t>(c)][idx];
          const double a2 = std::norm(g[static_cast<size_t>(c)]);
          gnorm2 += (II[c] == JJ[c]) ? a2 : 2.0 * a2;
        }
        const double x1 = freq[ix], x2 = freq[iy], x3 = freq[iz];
        const double xi2 = x1 * x1 + x2 * x2 + x3 * x3;
        out.scale = std::max(out.scale, std::sqrt(gnorm2) * xi2);
        const auto r = detail::constraint_symbols(g, x1, x2, x3);
        for (int e = 0; e < 6; ++e)
          out.max_abs[static_cast<size_t>(e)] =
              std::max(out.max_abs[static_cast<size_t>(e)], std::abs(r[static_cast<size_t>(e)]));
      }

  const double bar = out.tolerance * out.scale;
  out.reduced_verdict = out.max_abs[0] <= bar && out.max_abs[1] <= bar && out.max_abs[2] <= bar;
  out.full_verdict = out.reduced_verdict && out.max_abs[3] <= bar && out.max_abs[4] <= bar &&
                     out.max_abs[5] <= bar;
  return out;
}

// The three algebraic identities tying the mixed constraint symbols to the
// diagonal ones, valid for arbitrary symmetric g at every frequency:
//   2 x2 x3 R^4 =  x3^2 R^1 + x2^2 R^2 - x1^2 R^3
//   2 x1 x3 R^5 =  x3^2 R^1 - x2^2 R^2 + x1^2 R^3
//   2 x1 x2 R^6 = -x3^2 R^1 + x2^2 R^2 + x1^2 R^3
struct FourierRelationCheck {
  std::array<double, 3> max_residual{};
  double scale = 0.0;
  std::array<double, 3> relative{};
};

// g: arbitrary symmetric-matrix-valued function of the frequency vector.
inline FourierRelationCheck fourier_relation_check(
    const std::function<std::array<cplx, 6>(const Vec&)>& g, const std::vector<Vec>& freqs) {
  FourierRelationCheck out;
  for (const Vec& xi : freqs) {
    const auto gv = g(xi);
    const auto r = detail::constraint_symbols(gv, xi[0], xi[1], xi[2]);
    const double q1 = xi[0] * xi[0], q2 = xi[1] * xi[1], q3 = xi[2] * xi[2];
    const cplx lhs[3] = {2.0 * xi[1] * xi[2] * r[3], 2.0 * xi[0] * xi[2] * r[4],
                         2.0 * xi[0] * xi[1] * r[5]};
    const cplx rhs[3] = {q3 * r[0] + q2 * r[1] - q1 * r[2], q3 * r[0] - q2 * r[1] + q1 * r[2],
                         -q3 * r[0] + q2 * r[1] + q1 * r[2]};
    for (int k = 0; k < 3; ++k) {
      out.max_residual[static_cast<size_t>(k)] =
          std::max(out.max_residual[static_cast<size_t>(k)], std::abs(lhs[k] - rhs[k]));
      out.scale = std::max(out.scale, std::max(std::abs(lhs[k]), std::abs(rhs[k])));
    }
  }
  for (int k = 0; k < 3; ++k)
    out.relative[static_cast<size_t>(k)] =
        out.max_residual[static_cast<size_t>(k)] / std::max(out.scale, 1e-300);
  return out;
}

// Combined report for one field: both verdict routes side by side.
struct KernelReport {
  std::string field_id;
  KernelResiduals space;
  FourierResiduals fourier;
  bool space_available = false;
  bool fourier_available = false;
};

}  // namespace ptomo
