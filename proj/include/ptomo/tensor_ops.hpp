#pragma once

// Pointwise tensor algebra on n x n matrices attached to a unit direction xi:
// the orthogonal projector onto xi-perp, the two-sided transverse projection,
// its trace-free refinement, the 3D cross-product operator, and the
// symmetric/skew splits. These are the building blocks of the transport
// right-hand side and of the kernel characterization checks.

#include <utility>

#include "ptomo/linalg.hpp"

namespace ptomo {

// pi_xi = I - xi xi^T, the orthogonal projection onto the plane xi-perp.
// Idempotent and annihilates xi.
inline CMat orthogonal_projector(const UnitVec& xi) {
  const int n = xi.dim();
  CMat p = CMat::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p(i, j) -= cplx(xi[i] * xi[j]);
  return p;
}

// P_xi f = pi_xi f pi_xi, computed without forming pi_xi:
//   (P f)_ij = f_ij - xi_i v_j - u_i xi_j + s xi_i xi_j,
// with u = f xi, v = f^T xi, s = <f xi, xi>.
inline CMat project_transverse(const CMat& f, const UnitVec& xi) {
  const int n = f.dim();
  if (xi.dim() != n) throw std::invalid_argument("matrix/direction dimension mismatch");
  CVec u(n), v(n);
  for (int i = 0; i < n; ++i) {
    cplx su = 0.0, sv = 0.0;
    for (int j = 0; j < n; ++j) {
      su += f(i, j) * xi[j];
      sv += f(j, i) * xi[j];
    }
    u[i] = su;
    v[i] = sv;
  }
  cplx s = 0.0;
  for (int i = 0; i < n; ++i) s += u[i] * xi[i];
  CMat out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out(i, j) = f(i, j) - xi[i] * v[j] - u[i] * xi[j] + s * xi[i] * xi[j];
  return out;
}

// Q_xi f = P_xi f - tr(P_xi f)/(n-1) pi_xi: the transverse projection with its
// trace along xi-perp removed.
inline CMat project_transverse_traceless(const CMat& f, const UnitVec& xi) {
  const int n = f.dim();
  CMat p = project_transverse(f, xi);
  const cplx t = p.trace() / cplx(double(n - 1));
  const CMat pi = orthogonal_projector(xi);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p(i, j) -= t * pi(i, j);
  return p;
}

// L_v for a 3-vector v: the skew matrix with (L_v) w = v x w.
inline CMat cross_operator(const CVec& v) {
  if (v.dim() != 3) throw std::invalid_argument("cross_operator requires a 3-vector");
  CMat m(3);
  m(0, 1) = -v[2];
  m(0, 2) = v[1];
  m(1, 0) = v[2];
  m(1, 2) = -v[0];
  m(2, 0) = -v[1];
  m(2, 1) = v[0];
  return m;
}

inline CMat cross_operator(const Vec& v) { return cross_operator(CVec(v)); }

// Transpose-based split f = f_sym + f_skew with f_sym = (f + f^T)/2.
inline std::pair<CMat, CMat> sym_skew_split(const CMat& f) {
  const int n = f.dim();
  CMat s(n), k(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      s(i, j) = 0.5 * (f(i, j) + f(j, i));
      k(i, j) = 0.5 * (f(i, j) - f(j, i));
    }
  return {s, k};
}

// Adjoint-based split f = f_herm + f_skewherm with f_herm = (f + f*)/2.
inline std::pair<CMat, CMat> herm_skewherm_split(const CMat& f) {
  const int n = f.dim();
  CMat h(n), k(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const cplx aji = std::conj(f(j, i));
      h(i, j) = 0.5 * (f(i, j) + aji);
      k(i, j) = 0.5 * (f(i, j) - aji);
    }
  return {h, k};
}

}  // namespace ptomo
