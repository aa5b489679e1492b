#pragma once

// Line data over the tangent bundle {(x, xi): <x, xi> = 0} for compactly
// supported symmetric matrix fields:
//   S[f](x,xi) = int tr(pi_xi f pi_xi) dt   (transverse-trace data)
//   I[f](x,xi) = int <f xi, xi> dt          (longitudinal ray transform)
// plus the trace split f = ftilde + lambda * delta used to relate them.

#include <fstream>
#include <utility>
#include <vector>

#include "ptomo/fields.hpp"
#include "ptomo/geometry.hpp"
#include "ptomo/linalg.hpp"

namespace ptomo {

// Truncation half-length for a field supported in |y| <= support_radius,
// integrated along t -> x + t xi with <x, xi> = 0.
inline double line_half_length(const TangentLine& line, double support_radius) {
  return support_radius + norm(line.x);
}

struct LineSample {
  TangentLine line;
  double half_length;
  int intervals;

  LineSample(const TangentLine& l, double T, int nint) : line(l), half_length(T), intervals(nint) {
    if (!(T > 0.0)) throw std::invalid_argument("line half-length must be positive");
    if (nint < 2) throw std::invalid_argument("need at least 2 quadrature intervals");
  }
};

namespace detail {

template <class Integrand>
cplx simpson_line(const LineSample& s, Integrand&& g) {
  int nint = s.intervals;
  if (nint % 2) ++nint;
  const double h = 2.0 * s.half_length / nint;
  cplx acc = 0.0;
  for (int k = 0; k <= nint; ++k) {
    const double t = -s.half_length + k * h;
    const double w = (k == 0 || k == nint) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += (w * h / 3.0) * g(s.line.x + t * s.line.xi.vec());
  }
  return acc;
}

}  // namespace detail

inline constexpr int kDefaultLineIntervals = 4096;

// S[f] along one line. Defined for symmetric fields only.
inline cplx s_transform(const MatrixField& f, const LineSample& s) {
  if (f.symmetry() != SymmetryClass::Symmetric)
    throw std::domain_error("s_transform requires a field declared symmetric");
  const UnitVec& xi = s.line.xi;
  const int n = f.dim();
  return detail::simpson_line(s, [&](const Vec& x) {
    const CMat m = f.eval(x);
    cplx v = m.trace();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v -= xi[i] * m(i, j) * xi[j];
    return v;
  });
}

inline cplx s_transform(const MatrixField& f, const TangentLine& line, double support_radius,
                        int intervals = kDefaultLineIntervals) {
  return s_transform(f, LineSample(line, line_half_length(line, support_radius), intervals));
}

// I[f] along one line: the longitudinal ray transform sum f_ij xi^i xi^j.
inline cplx ray_transform(const MatrixField& f, const LineSample& s) {
  const UnitVec& xi = s.line.xi;
  const int n = f.dim();
  return detail::simpson_line(s, [&](const Vec& x) {
    const CMat m = f.eval(x);
    cplx v = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v += xi[i] * m(i, j) * xi[j];
    return v;
  });
}

inline cplx ray_transform(const MatrixField& f, const TangentLine& line, double support_radius,
                          int intervals = kDefaultLineIntervals) {
  return ray_transform(f, LineSample(line, line_half_length(line, support_radius), intervals));
}

// Pointwise trace split m = mtilde + lambda * I with lambda = tr(m)/n.
inline std::pair<CMat, cplx> trace_split(const CMat& m) {
  const int n = m.dim();
  const cplx lambda = m.trace() / double(n);
  CMat t = m;
  for (int i = 0; i < n; ++i) t(i, i) -= lambda;
  return {t, lambda};
}

// Field-level trace split for Gaussian-polynomial fields: returns the
// trace-free part and the scalar lambda with exact derivatives preserved.
struct GaussPolyTraceSplit {
  GaussPolyMatrixField traceless;
  GaussPoly lambda;
};

inline GaussPolyTraceSplit trace_split(const GaussPolyMatrixField& f) {
  const int n = f.dim();
  GaussPoly lam;
  for (int i = 0; i < n; ++i) lam += f.entry(i, i);
  lam = cplx(1.0 / n) * lam;
  std::array<std::array<GaussPoly, 4>, 4> e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      e[static_cast<size_t>(i)][static_cast<size_t>(j)] = f.entry(i, j);
      if (i == j) e[static_cast<size_t>(i)][static_cast<size_t>(j)] += cplx(-1.0) * lam;
    }
  return {GaussPolyMatrixField(n, f.symmetry(), e), lam};
}

// Sinogram rows: foot point, direction, S value, I value.
struct SinogramRow {
  TangentLine line;
  cplx s_value;
  cplx i_value;
  SinogramRow(const TangentLine& l, cplx s, cplx i) : line(l), s_value(s), i_value(i) {}
};

inline std::vector<SinogramRow> sinogram(const MatrixField& f, const std::vector<TangentLine>& lines,
                                         double support_radius,
                                         int intervals = kDefaultLineIntervals) {
  std::vector<SinogramRow> rows;
  rows.reserve(lines.size());
  for (const TangentLine& l : lines) {
    rows.emplace_back(l, s_transform(f, l, support_radius, intervals),
                      ray_transform(f, l, support_radius, intervals));
  }
  return rows;
}

inline void write_sinogram_csv(const std::vector<SinogramRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "x1,x2,x3,xi1,xi2,xi3,s_re,s_im,i_re,i_im\n";
  char buf[300];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.line.x[0],
                  r.line.x[1], r.line.x[2], r.line.xi[0], r.line.xi[1], r.line.xi[2],
                  r.s_value.real(), r.s_value.imag(), r.i_value.real(), r.i_value.imag());
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace ptomo
