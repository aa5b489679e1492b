#pragma once

// Seeded generators for the standard test-field families. Every family is a
// Gaussian-polynomial field, so exact derivatives and support radii are
// available throughout.

#include <cstdint>

#include "ptomo/fields.hpp"
#include "ptomo/gausspoly.hpp"
#include "ptomo/rng.hpp"
#include "ptomo/saintvenant.hpp"

namespace ptomo {

// Random polynomial with iid standard-normal coefficients on all monomials
// of total degree <= degree, scaled by amplitude.
inline Poly3 random_poly(Rng& rng, int degree, double amplitude, bool complex_coeffs = false) {
  Poly3 p;
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; i + j <= degree; ++j)
      for (int k = 0; i + j + k <= degree; ++k) {
        const double re = rng.normal();
        const double im = complex_coeffs ? rng.normal() : 0.0;
        p.add_term({i, j, k}, amplitude * cplx(re, im));
      }
  return p;
}

struct FamilyParams {
  int degree = 2;
  double envelope = 1.0;   // Gaussian rate a in exp(-a r^2)
  double amplitude = 1.0;
  bool complex_coeffs = false;
};

// Zero field.
inline GaussPolyMatrixField zero_field(int n = 3) {
  std::array<std::array<GaussPoly, 4>, 4> e;
  return GaussPolyMatrixField(n, SymmetryClass::Symmetric, e);
}

// Random symmetric field: independent random entries on and above the
// diagonal, mirrored below. Generically not in the data kernel.
inline GaussPolyMatrixField random_symmetric_field(std::uint64_t seed, const FamilyParams& prm = {}) {
  Rng rng(seed);
  std::array<std::array<GaussPoly, 4>, 4> e;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      GaussPoly g(random_poly(rng, prm.degree, prm.amplitude, prm.complex_coeffs), prm.envelope);
      e[static_cast<size_t>(i)][static_cast<size_t>(j)] = g;
      e[static_cast<size_t>(j)][static_cast<size_t>(i)] = g;
    }
  return GaussPolyMatrixField(3, SymmetryClass::Symmetric, e);
}

// Random skew-Hermitian field: imaginary random diagonal, off-diagonal pairs
// f_ji = -conj(f_ij).
inline GaussPolyMatrixField random_skew_hermitian_field(std::uint64_t seed,
                                                        const FamilyParams& prm = {}) {
  Rng rng(seed);
  std::array<std::array<GaussPoly, 4>, 4> e;
  for (int i = 0; i < 3; ++i) {
    Poly3 p = random_poly(rng, prm.degree, prm.amplitude, false);
    e[static_cast<size_t>(i)][static_cast<size_t>(i)] =
        GaussPoly(p * cplx(0.0, 1.0), prm.envelope);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      Poly3 p = random_poly(rng, prm.degree, prm.amplitude, true);
      e[static_cast<size_t>(i)][static_cast<size_t>(j)] = GaussPoly(p, prm.envelope);
      e[static_cast<size_t>(j)][static_cast<size_t>(i)] =
          GaussPoly(p.conjugate() * cplx(-1.0), prm.envelope);
    }
  return GaussPolyMatrixField(3, SymmetryClass::SkewHermitian, e);
}

// Random vector potential for kernel-field construction.
inline GaussPolyVector random_potential(std::uint64_t seed, const FamilyParams& prm = {}) {
  Rng rng(seed);
  GaussPolyVector v;
  for (int i = 0; i < 3; ++i)
    v[static_cast<size_t>(i)] =
        GaussPoly(random_poly(rng, prm.degree, prm.amplitude, prm.complex_coeffs), prm.envelope);
  return v;
}

inline GaussPolyMatrixField random_kernel_field(std::uint64_t seed, const FamilyParams& prm = {}) {
  return kernel_field_from_potential(random_potential(seed, prm));
}

// lambda(x) * I with lambda = amplitude * p(x) exp(-a r^2); p defaults to 1.
inline GaussPolyMatrixField lambda_identity_field(const GaussPoly& lambda, int n = 3) {
  std::array<std::array<GaussPoly, 4>, 4> e;
  for (int i = 0; i < n; ++i) e[static_cast<size_t>(i)][static_cast<size_t>(i)] = lambda;
  return GaussPolyMatrixField(n, SymmetryClass::Symmetric, e);
}

inline GaussPolyMatrixField gaussian_identity_field(double amplitude, double envelope) {
  return lambda_identity_field(GaussPoly(Poly3(cplx(amplitude)), envelope));
}

// Constant matrix as a field (no envelope); pointwise algebra tests only.
inline GaussPolyMatrixField constant_field(const CMat& m, SymmetryClass sym) {
  std::array<std::array<GaussPoly, 4>, 4> e;
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j)
      e[static_cast<size_t>(i)][static_cast<size_t>(j)] = GaussPoly(Poly3(m(i, j)), 0.0);
  return GaussPolyMatrixField(m.dim(), sym, e);
}

}  // namespace ptomo
