#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ptomo/forms.hpp"
#include "ptomo/rng.hpp"

namespace {

using namespace ptomo;

CMat random_real_skew(int n, Rng& rng) {
  CMat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double a = rng.uniform(-1, 1);
      m(i, j) = a;
      m(j, i) = -a;
    }
  return m;
}

CMat random_real_general(int n, Rng& rng) {
  CMat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1, 1);
  return m;
}

// rotation composed from plane rotations; mixes every pair of axes
CMat sample_rotation(int n) {
  CMat r = CMat::identity(n);
  double angle = 0.4;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      CMat g = CMat::identity(n);
      g(i, i) = std::cos(angle);
      g(j, j) = std::cos(angle);
      g(i, j) = -std::sin(angle);
      g(j, i) = std::sin(angle);
      r = r * g;
      angle += 0.7;
    }
  return r;
}

TEST(FormB, SkewConstantAcrossRandomMatrices) {
  // B/(omega |f|^2) = (n^2 - 3n - 2)/n on real skew-symmetric f
  for (int n : {3, 4}) {
    const SphereQuadrature quad = sphere_quadrature(n);
    const double expected = (n * n - 3 * n - 2) / double(n);
    Rng rng(100 + static_cast<std::uint64_t>(n));
    for (int trial = 0; trial < 100; ++trial) {
      const CMat f = random_real_skew(n, rng);
      const double f2 = f.frob_norm_sq();
      if (f2 < 1e-6) continue;
      EXPECT_NEAR(form_B(f, n, quad).per_omega() / f2, expected, 1e-10);
    }
  }
}

TEST(FormQ, SkewConstantAndIdentityValue) {
  const SphereQuadrature quad = sphere_quadrature(3);
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const CMat f = random_real_skew(3, rng);
    const double f2 = f.frob_norm_sq();
    if (f2 < 1e-6) continue;
    EXPECT_NEAR(form_Q(f, quad).per_omega() / f2, 1.0 / 3.0, 1e-10);
  }
  EXPECT_NEAR(form_Q(CMat::identity(3), quad).per_omega(), 1.0, 1e-12);
  EXPECT_THROW(form_Q(CMat::identity(4), sphere_quadrature(4)), std::invalid_argument);
  EXPECT_THROW(form_B(CMat::identity(3), 4, sphere_quadrature(4)), std::invalid_argument);
}

TEST(FormB, ComplexValueSplitsIntoRealAndImaginaryParts) {
  const SphereQuadrature quad = sphere_quadrature(3);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat re = random_real_general(3, rng);
    const CMat im = random_real_general(3, rng);
    CMat f(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) f(i, j) = cplx(re(i, j).real(), im(i, j).real());
    const double whole = form_B(f, 3, quad).value;
    const double parts = form_B(re, 3, quad).value + form_B(im, 3, quad).value;
    EXPECT_NEAR(whole, parts, 1e-12 * std::max(1.0, std::abs(whole)));
  }
}

TEST(FormB, InvariantUnderRotation) {
  for (int n : {3, 4}) {
    const SphereQuadrature quad = sphere_quadrature(n);
    const CMat r = sample_rotation(n);
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      const CMat f = random_real_general(n, rng);
      const CMat conj = r.transpose() * f * r;
      EXPECT_NEAR(form_B(conj, n, quad).value, form_B(f, n, quad).value,
                  1e-10 * f.frob_norm_sq());
    }
  }
}

TEST(MomentIdentity, HoldsForSkewAndGivesTwoThirdsForAxisGenerator) {
  const SphereQuadrature quad = sphere_quadrature(3);
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial)
    EXPECT_LE(moment_identity_check(random_real_skew(3, rng), quad), 1e-12);
  EXPECT_LE(moment_identity_check(random_real_skew(4, rng), sphere_quadrature(4)), 1e-12);

  // f = L_{e3}: (1/omega) integral |f xi|^2 = |f|^2 / 3 = 2/3
  CMat l(3);
  l(0, 1) = -1.0;
  l(1, 0) = 1.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
    const double v = norm(apply(l, quad.nodes[k]));
    acc += quad.weights[k] * v * v;
  }
  EXPECT_NEAR(acc / sphere_surface_measure(3), 2.0 / 3.0, 1e-12);
}

void expect_spectrum(const PositivityScan& scan, const std::vector<double>& expected) {
  ASSERT_EQ(scan.quotients.size(), expected.size());
  ASSERT_EQ(scan.basis_dim, int(expected.size()));
  for (std::size_t i = 0; i < expected.size(); ++i)
    EXPECT_NEAR(scan.quotients[i], expected[i], 1e-10) << "eigenvalue " << i;
  EXPECT_NEAR(scan.min_quotient, expected.front(), 1e-10);
}

TEST(PositivityScan, SymmetricSpectrumIsTracelessPlusTraceLine) {
  // n = 3: quotient 2/15 on the 5-dim traceless symmetric part, 4/3 on the
  // trace line; n = 4: 13/12 and 9/4
  expect_spectrum(positivity_scan(3, SymmetryClass::Symmetric, sphere_quadrature(3)),
                  {2.0 / 15, 2.0 / 15, 2.0 / 15, 2.0 / 15, 2.0 / 15, 4.0 / 3});
  expect_spectrum(positivity_scan(4, SymmetryClass::Symmetric, sphere_quadrature(4)),
                  {13.0 / 12, 13.0 / 12, 13.0 / 12, 13.0 / 12, 13.0 / 12, 13.0 / 12,
                   13.0 / 12, 13.0 / 12, 13.0 / 12, 9.0 / 4});
}

TEST(PositivityScan, SkewSpectrumIsConstant) {
  expect_spectrum(positivity_scan(3, SymmetryClass::SkewHermitian, sphere_quadrature(3)),
                  {-2.0 / 3, -2.0 / 3, -2.0 / 3});
  expect_spectrum(positivity_scan(4, SymmetryClass::SkewHermitian, sphere_quadrature(4)),
                  {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
}

TEST(PositivityScan, GeneralSpectrumIsUnionOfBlocks) {
  // the form has no symmetric/skew cross terms, so the general spectrum is
  // the union of the two block spectra
  expect_spectrum(positivity_scan(3, SymmetryClass::General, sphere_quadrature(3)),
                  {-2.0 / 3, -2.0 / 3, -2.0 / 3, 2.0 / 15, 2.0 / 15, 2.0 / 15, 2.0 / 15,
                   2.0 / 15, 4.0 / 3});
  expect_spectrum(positivity_scan(4, SymmetryClass::General, sphere_quadrature(4)),
                  {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 13.0 / 12, 13.0 / 12, 13.0 / 12,
                   13.0 / 12, 13.0 / 12, 13.0 / 12, 13.0 / 12, 13.0 / 12, 13.0 / 12,
                   9.0 / 4});
}

TEST(PositivityScan, WorstTensorAttainsMinimum) {
  for (int n : {3, 4}) {
    const SphereQuadrature quad = sphere_quadrature(n);
    const PositivityScan scan = positivity_scan(n, SymmetryClass::General, quad);
    const double f2 = scan.worst.frob_norm_sq();
    ASSERT_NEAR(f2, 1.0, 1e-10);
    EXPECT_NEAR(form_B(scan.worst, n, quad).per_omega() / f2, scan.min_quotient, 1e-9);
  }
}

TEST(FormB, MonteCarloAgreesWithProductRule) {
  Rng rng(55);
  const CMat f = random_real_skew(3, rng);
  const SphereQuadrature mc = sphere_quadrature_mc(3, 20000, 99);
  EXPECT_EQ(mc.tag, "monte-carlo-20000");
  const double exact = -2.0 / 3.0 * f.frob_norm_sq();
  // MC noise at 20000 nodes stays well inside 5 sigma of this bound
  EXPECT_NEAR(form_B(f, 3, mc).per_omega(), exact, 0.15 * f.frob_norm_sq());
}

}  // namespace
