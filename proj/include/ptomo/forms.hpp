#pragma once

// Sphere-averaged quadratic forms behind the uniqueness estimates:
//   B(f,f) = integral over the unit sphere of
//            (n-1)|P_xi f|^2 - 2(|pi_xi f xi|^2 + |pi_xi f* xi|^2),
//   Q(f,f) = integral of |f|^2 - 2|f xi|^2  (n = 3).
// Both are real for complex f. On real skew-symmetric f the averages are
// exact constants: B/(omega |f|^2) = (n^2-3n-2)/n and Q/(omega |f|^2) = 1/3
// at n = 3. positivity_scan assembles the Gram matrix of B on a real tensor
// basis by polarization and reports the smallest Rayleigh quotient.

#include <string>
#include <vector>

#include "ptomo/fields.hpp"
#include "ptomo/linalg.hpp"
#include "ptomo/sphere_quadrature.hpp"
#include "ptomo/tensor_ops.hpp"

namespace ptomo {

struct FormValue {
  double value = 0.0;  // raw quadrature sum over the sphere
  int n = 3;
  std::string quadrature_tag;
  double per_omega() const { return value / sphere_surface_measure(n); }
};

inline FormValue form_B(const CMat& f, int n, const SphereQuadrature& quad) {
  if (f.dim() != n || quad.n != n) throw std::invalid_argument("form_B dimension mismatch");
  const CMat fs = f.adjoint();
  double acc = 0.0;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
    const UnitVec xi = UnitVec::normalized(quad.nodes[k]);
    const CMat proj = orthogonal_projector(xi);
    const CMat pf = project_transverse(f, xi);
    const CVec u = apply(proj, apply(f, xi.vec()));
    const CVec w = apply(proj, apply(fs, xi.vec()));
    const double nu = norm(u), nw = norm(w);
    acc += quad.weights[k] *
           ((n - 1) * pf.frob_norm_sq() - 2.0 * (nu * nu + nw * nw));
  }
  return FormValue{acc, n, quad.tag};
}

inline FormValue form_Q(const CMat& f, const SphereQuadrature& quad) {
  if (quad.n != 3 || f.dim() != 3) throw std::invalid_argument("form_Q requires n = 3");
  const double f2 = f.frob_norm_sq();
  double acc = 0.0;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
    const double nfx = norm(apply(f, quad.nodes[k]));
    acc += quad.weights[k] * (f2 - 2.0 * nfx * nfx);
  }
  return FormValue{acc, 3, quad.tag};
}

// |(1/omega) integral |f xi|^2 - |f|^2 / n| for skew-symmetric real f.
inline double moment_identity_check(const CMat& f, const SphereQuadrature& quad) {
  const int n = quad.n;
  if (f.dim() != n) throw std::invalid_argument("moment_identity_check dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
    const double nfx = norm(apply(f, quad.nodes[k]));
    acc += quad.weights[k] * nfx * nfx;
  }
  return std::abs(acc / sphere_surface_measure(n) - f.frob_norm_sq() / n);
}

namespace detail {

// Frobenius-orthonormal real basis of the requested tensor class.
inline std::vector<CMat> real_tensor_basis(int n, SymmetryClass cls) {
  std::vector<CMat> basis;
  const double rhalf = 1.0 / std::sqrt(2.0);
  if (cls == SymmetryClass::Symmetric || cls == SymmetryClass::General) {
    for (int i = 0; i < n; ++i) {
      CMat m = CMat::zero(n);
      m(i, i) = 1.0;
      basis.push_back(m);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        CMat m = CMat::zero(n);
        m(i, j) = rhalf;
        m(j, i) = rhalf;
        basis.push_back(m);
      }
  }
  if (cls == SymmetryClass::SkewHermitian || cls == SymmetryClass::General) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        CMat m = CMat::zero(n);
        m(i, j) = rhalf;
        m(j, i) = -rhalf;
        basis.push_back(m);
      }
  }
  return basis;
}

// Jacobi eigendecomposition of a small symmetric matrix; returns eigenvalues
// ascending, eigenvectors as columns of v.
inline void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eval,
                         std::vector<double>& evec) {
  evec.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) evec[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(i)] = 1.0;
  auto at = [&](std::vector<double>& m, int i, int j) -> double& {
    return m[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)];
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += at(a, i, j) * at(a, i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(a, k, p), akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(a, p, k), aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = at(evec, k, p), vkq = at(evec, k, q);
          at(evec, k, p) = c * vkp - s * vkq;
          at(evec, k, q) = s * vkp + c * vkq;
        }
      }
  }
  eval.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) eval[static_cast<size_t>(i)] = at(a, i, i);
  // sort ascending, permuting eigenvector columns alongside
  for (int i = 0; i < n; ++i) {
    int best = i;
    for (int j = i + 1; j < n; ++j)
      if (eval[static_cast<size_t>(j)] < eval[static_cast<size_t>(best)]) best = j;
    if (best != i) {
      std::swap(eval[static_cast<size_t>(i)], eval[static_cast<size_t>(best)]);
      for (int k = 0; k < n; ++k) std::swap(at(evec, k, i), at(evec, k, best));
    }
  }
}

}  // namespace detail

struct PositivityScan {
  double min_quotient = 0.0;  // smallest eigenvalue of B/omega on the class
  CMat worst;                 // unit-Frobenius tensor attaining it
  std::vector<double> quotients;
  int basis_dim = 0;
};

// Gram matrix of B on a real basis of the class via polarization of the
// quadratic form; eigenvalues are Rayleigh quotients B/(omega |f|^2).
inline PositivityScan positivity_scan(int n, SymmetryClass cls, const SphereQuadrature& quad) {
  const std::vector<CMat> basis = detail::real_tensor_basis(n, cls);
  const int d = int(basis.size());
  const double omega = sphere_surface_measure(n);
  std::vector<double> gram(static_cast<size_t>(d) * static_cast<size_t>(d), 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      CMat plus = basis[static_cast<size_t>(i)];
      plus += basis[static_cast<size_t>(j)];
      CMat minus = basis[static_cast<size_t>(i)];
      minus -= basis[static_cast<size_t>(j)];
      const double bij =
          (form_B(plus, n, quad).value - form_B(minus, n, quad).value) / (4.0 * omega);
      gram[static_cast<size_t>(i) * static_cast<size_t>(d) + static_cast<size_t>(j)] = bij;
      gram[static_cast<size_t>(j) * static_cast<size_t>(d) + static_cast<size_t>(i)] = bij;
    }
  std::vector<double> eval, evec;
  detail::jacobi_eigen(gram, d, eval, evec);
  CMat worst = CMat::zero(n);
  for (int i = 0; i < d; ++i) {
    CMat term = basis[static_cast<size_t>(i)];
    term *= cplx(evec[static_cast<size_t>(i) * static_cast<size_t>(d)], 0.0);
    worst += term;
  }
  return PositivityScan{eval.empty() ? 0.0 : eval.front(), worst, eval, d};
}

}  // namespace ptomo
