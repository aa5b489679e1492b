#include <gtest/gtest.h>

#include "ptomo/families.hpp"
#include "ptomo/fields.hpp"
#include "ptomo/gausspoly.hpp"

namespace {

using namespace ptomo;

double max_abs(const CMat& m) { return m.max_abs(); }

TEST(Poly3, EvalProductDerivative) {
  // p = x1 * x2^2 + 2i
  Poly3 p = Poly3::monomial(1, 2, 0);
  p += Poly3(cplx(0.0, 2.0));
  const Vec x(1.5, -2.0, 0.5);
  EXPECT_NEAR(std::abs(p.eval(x) - cplx(6.0, 2.0)), 0.0, 1e-14);
  EXPECT_EQ(p.degree(), 3);

  const Poly3 q = Poly3::monomial(0, 0, 1, 3.0);  // 3 x3
  const Poly3 pq = p * q;                         // 3 x1 x2^2 x3 + 6i x3
  EXPECT_NEAR(std::abs(pq.eval(x) - cplx(9.0, 3.0)), 0.0, 1e-14);

  const Poly3 dp = p.derivative(1);  // 2 x1 x2
  EXPECT_NEAR(std::abs(dp.eval(x) - cplx(-6.0, 0.0)), 0.0, 1e-14);
}

TEST(GaussPoly, EvalMatchesHandFormula) {
  // g = x1 x2^2 exp(-0.5 r^2)
  const GaussPoly g(Poly3::monomial(1, 2, 0), 0.5);
  const Vec x(0.3, -0.7, 1.1);
  const double r2 = dot(x, x);
  const double expected = 0.3 * 0.49 * std::exp(-0.5 * r2);
  EXPECT_NEAR(std::abs(g.eval(x) - expected), 0.0, 1e-15);
}

TEST(GaussPoly, DerivativeMatchesFiniteDifference) {
  Rng rng(13);
  const GaussPoly g(random_poly(rng, 3, 1.0, true), 0.8);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    for (int ax = 0; ax < 3; ++ax) {
      Vec xp = x, xm = x;
      xp[ax] += h;
      xm[ax] -= h;
      const cplx fd = (g.eval(xp) - g.eval(xm)) / (2.0 * h);
      EXPECT_NEAR(std::abs(g.derivative(ax).eval(x) - fd), 0.0, 1e-6);
    }
  }
}

TEST(GaussPoly, SupportRadiusBoundsTail) {
  Rng rng(29);
  const GaussPoly g(random_poly(rng, 2, 3.0), 1.0);
  const double r = g.support_radius(1e-12);
  for (const Vec& dir : {Vec(1, 0, 0), Vec(0.6, 0.8, 0), Vec(0, 0, -1)})
    EXPECT_LE(std::abs(g.eval(r * dir)), 1e-12);
}

TEST(GaussPoly, MixedEnvelopeAdditionThrows) {
  const GaussPoly a(Poly3(cplx(1.0)), 1.0);
  const GaussPoly b(Poly3(cplx(1.0)), 2.0);
  GaussPoly c = a;
  EXPECT_THROW(c += b, std::invalid_argument);
}

TEST(MatrixField, DeclaredSymmetryIsValidated) {
  std::array<std::array<GaussPoly, 4>, 4> e;
  e[0][1] = GaussPoly(Poly3(cplx(1.0)), 1.0);  // asymmetric: e[1][0] stays zero
  EXPECT_THROW(GaussPolyMatrixField(3, SymmetryClass::Symmetric, e), std::invalid_argument);
  EXPECT_NO_THROW(GaussPolyMatrixField(3, SymmetryClass::General, e));
}

TEST(MatrixField, FirstDerivativeMatchesFiniteDifference) {
  const GaussPolyMatrixField f = random_symmetric_field(3);
  Rng rng(17);
  const double h = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
    for (int ax = 0; ax < 3; ++ax) {
      Vec xp = x, xm = x;
      xp[ax] += h;
      xm[ax] -= h;
      const CMat fd = (f.eval(xp) - f.eval(xm)) * (1.0 / (2.0 * h));
      EXPECT_NEAR(max_abs(f.d1(x, ax) - fd), 0.0, 1e-6);
    }
  }
}

TEST(MatrixField, SecondDerivativeMatchesDifferencedFirst) {
  const GaussPolyMatrixField f = random_symmetric_field(23);
  Rng rng(5);
  const double h = 1e-5;
  const Vec x(0.2, -0.4, 0.3);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      Vec xp = x, xm = x;
      xp[l] += h;
      xm[l] -= h;
      const CMat fd = (f.d1(xp, k) - f.d1(xm, k)) * (1.0 / (2.0 * h));
      EXPECT_NEAR(max_abs(f.d2(x, k, l) - fd), 0.0, 1e-6);
      // mixed partials commute
      EXPECT_NEAR(max_abs(f.d2(x, k, l) - f.d2(x, l, k)), 0.0, 1e-12);
    }
}

TEST(MatrixField, DerivativeFieldAgreesWithD1) {
  const GaussPolyMatrixField f = random_skew_hermitian_field(31);
  const Vec x(0.1, 0.5, -0.2);
  for (int ax = 0; ax < 3; ++ax)
    EXPECT_NEAR(max_abs(f.derivative_field(ax).eval(x) - f.d1(x, ax)), 0.0, 1e-14);
}

TEST(Families, SymmetryClassesHold) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    EXPECT_NEAR(symmetry_defect(random_symmetric_field(7).eval(x), SymmetryClass::Symmetric), 0.0,
                1e-13);
    EXPECT_NEAR(
        symmetry_defect(random_skew_hermitian_field(7).eval(x), SymmetryClass::SkewHermitian), 0.0,
        1e-13);
    EXPECT_NEAR(symmetry_defect(random_kernel_field(7).eval(x), SymmetryClass::Symmetric), 0.0,
                1e-13);
    EXPECT_NEAR(max_abs(zero_field().eval(x)), 0.0, 0.0);
  }
}

TEST(Families, LambdaIdentityAndConstant) {
  const GaussPoly lam(Poly3(cplx(2.0)), 1.0);
  const GaussPolyMatrixField f = lambda_identity_field(lam);
  const Vec x(0.3, 0.1, -0.6);
  const CMat m = f.eval(x);
  const double expected = 2.0 * std::exp(-dot(x, x));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_NEAR(std::abs(m(i, j) - (i == j ? expected : 0.0)), 0.0, 1e-14);

  CMat c(3);
  c(0, 1) = cplx(1.0, 2.0);
  c(1, 0) = cplx(1.0, 2.0);
  const GaussPolyMatrixField g = constant_field(c, SymmetryClass::Symmetric);
  EXPECT_NEAR(max_abs(g.eval(Vec(5, 5, 5)) - c), 0.0, 1e-14);  // no envelope decay
}

TEST(GridSpec, CenteredCubeLayout) {
  const GridSpec spec = GridSpec::centered_cube(5, 2.0);
  EXPECT_DOUBLE_EQ(spec.spacing, 1.0);
  EXPECT_EQ(spec.node_count(), 125u);
  const Vec first = spec.node_point(0, 0, 0);
  const Vec last = spec.node_point(4, 4, 4);
  for (int k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(first[k], -2.0);
    EXPECT_DOUBLE_EQ(last[k], 2.0);
  }
  EXPECT_THROW(GridSpec({1, 2, 2}, Vec(0, 0, 0), 1.0), std::invalid_argument);
}

TEST(GridField, NodesReproduceSamples) {
  const GaussPolyMatrixField f = random_symmetric_field(2);
  const GridSpec spec = GridSpec::centered_cube(7, 1.5);
  const GridField g = GridField::sample(f, spec);
  for (int ix = 0; ix < 7; ix += 3)
    for (int iy = 0; iy < 7; iy += 2)
      for (int iz = 0; iz < 7; iz += 2) {
        const Vec x = spec.node_point(ix, iy, iz);
        EXPECT_NEAR(max_abs(g.eval(x) - f.eval(x)), 0.0, 1e-13);
        EXPECT_NEAR(max_abs(g.node_value(ix, iy, iz) - f.eval(x)), 0.0, 0.0);
      }
}

TEST(GridField, CellCenterAveragesCorners) {
  const GaussPolyMatrixField f = random_symmetric_field(9);
  const GridSpec spec = GridSpec::centered_cube(4, 1.0);
  const GridField g = GridField::sample(f, spec);
  // value at a cell center is the mean of its 8 corner values
  CMat avg(3);
  for (int dx = 0; dx < 2; ++dx)
    for (int dy = 0; dy < 2; ++dy)
      for (int dz = 0; dz < 2; ++dz) avg += g.node_value(1 + dx, 1 + dy, 1 + dz);
  avg *= 0.125;
  const Vec center = 0.5 * (spec.node_point(1, 1, 1) + spec.node_point(2, 2, 2));
  EXPECT_NEAR(max_abs(g.eval(center) - avg), 0.0, 1e-13);
}

TEST(GridField, ZeroOutsideBox) {
  const GridField g = GridField::sample(random_symmetric_field(4), GridSpec::centered_cube(4, 1.0));
  EXPECT_NEAR(max_abs(g.eval(Vec(1.01, 0, 0))), 0.0, 0.0);
  EXPECT_NEAR(max_abs(g.eval(Vec(0, -2.0, 0))), 0.0, 0.0);
}

TEST(GridField, RejectsMislabeledValues) {
  const GridSpec spec = GridSpec::centered_cube(2, 1.0);
  std::vector<cplx> v(spec.node_count() * 9, cplx(0.0));
  v[1] = cplx(1.0);  // entry (0,1) of first node without the mirrored (1,0)
  EXPECT_THROW(GridField(3, SymmetryClass::Symmetric, spec, v), std::invalid_argument);
  EXPECT_NO_THROW(GridField(3, SymmetryClass::General, spec, v));
  EXPECT_THROW(GridField(3, SymmetryClass::General, spec, std::vector<cplx>(5)),
               std::invalid_argument);
}

void check_scalar_field(const ScalarField& s, const Vec& x, double grad_tol, double lap_tol) {
  const double h = 1e-5;
  const Vec g = s.gradient(x);
  double lap_fd = 0.0;
  for (int ax = 0; ax < 3; ++ax) {
    Vec xp = x, xm = x;
    xp[ax] += h;
    xm[ax] -= h;
    EXPECT_NEAR(g[ax], (s.value(xp) - s.value(xm)) / (2.0 * h), grad_tol);
    lap_fd += (s.value(xp) - 2.0 * s.value(x) + s.value(xm)) / (h * h);
  }
  if (s.laplacian) {
    EXPECT_NEAR(s.laplacian(x), lap_fd, lap_tol);
  }
}

TEST(ScalarFields, DerivativesAreConsistent) {
  Rng rng(3);
  const ScalarField flat = lambda_flat_ball();
  const ScalarField gauss = lambda_gaussian(1.5);
  const ScalarField bump = lambda_interior_bump(0.8, 4);
  for (int trial = 0; trial < 8; ++trial) {
    const Vec x = 0.4 * rng.unit_sphere(3).vec() * rng.uniform();
    check_scalar_field(flat, x, 1e-8, 1e-4);
    check_scalar_field(gauss, x, 1e-8, 1e-4);
    check_scalar_field(bump, x, 1e-8, 1e-4);
  }
}

TEST(ScalarFields, BoundaryBehavior) {
  const ScalarField flat = lambda_flat_ball();
  EXPECT_DOUBLE_EQ(flat.value(Vec(1, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(flat.value(Vec(0.9, 0.9, 0)), 0.0);
  const ScalarField bump = lambda_interior_bump(0.5, 3);
  EXPECT_DOUBLE_EQ(bump.value(Vec(0.51, 0, 0)), 0.0);
  EXPECT_GT(bump.value(Vec(0.2, 0.1, 0)), 0.0);
  EXPECT_THROW(lambda_interior_bump(-1.0), std::invalid_argument);
}

TEST(WeightField, UnitAndCallable) {
  const WeightField u = WeightField::unit(3);
  EXPECT_TRUE(u.is_unit());
  EXPECT_NEAR(max_abs(u.eval(Vec(1, 2, 3), UnitVec(Vec(0, 0, 1))) - CMat::identity(3)), 0.0, 0.0);

  const WeightField w(3, [](const Vec& x, const UnitVec&) {
    CMat m = CMat::identity(3);
    m(0, 0) = x[0];
    return m;
  });
  EXPECT_FALSE(w.is_unit());
  EXPECT_NEAR(std::abs(w.eval(Vec(7, 0, 0), UnitVec(Vec(1, 0, 0)))(0, 0) - 7.0), 0.0, 0.0);
}

}  // namespace
