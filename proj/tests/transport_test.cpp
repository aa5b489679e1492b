#include <gtest/gtest.h>

#include <cmath>

#include "ptomo/families.hpp"
#include "ptomo/geometry.hpp"
#include "ptomo/tensor_ops.hpp"
#include "ptomo/transport.hpp"

namespace {

using namespace ptomo;

double max_abs(const CMat& m) { return m.max_abs(); }

// f = L_{grad lambda}, the cross-product field of the gradient
CallableField gradient_cross_field(const ScalarField& lambda) {
  return CallableField(3, SymmetryClass::SkewHermitian,
                       [lambda](const Vec& x) { return cross_operator(lambda.gradient(x)); });
}

TEST(RotationClosedForm, IsRotationAboutAxis) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const UnitVec xi = rng.unit_sphere(3);
    const double theta = rng.uniform(-3.0, 3.0);
    const CMat u = rotation_closed_form(theta, xi);
    EXPECT_NEAR(max_abs(u.adjoint() * u - CMat::identity(3)), 0.0, 1e-14);
    // axis is fixed
    CVec axis(3);
    for (int i = 0; i < 3; ++i) axis[i] = xi[i];
    EXPECT_NEAR(norm(apply(u, axis) - axis), 0.0, 1e-14);
    // frame vector turns by theta with the orientation of L_xi
    const auto [e1, e2] = orthonormal_frame(xi);
    CVec v(3);
    for (int i = 0; i < 3; ++i) v[i] = e1[i];
    const CVec w = apply(u, v);
    cplx c = 0.0, s = 0.0;
    for (int i = 0; i < 3; ++i) {
      c += w[i] * e1[i];
      s += w[i] * e2[i];
    }
    EXPECT_NEAR(std::abs(c - std::cos(theta)), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(s - std::sin(theta)), 0.0, 1e-13);
  }
}

TEST(Transport, PotentialFieldMatchesRotationAlongChord) {
  // for f = L_{grad lambda} with lambda zero on the boundary, the solution is
  // the rotation about xi by the running angle lambda(x(t))
  const ScalarField lambda = lambda_flat_ball();
  const CallableField f = gradient_cross_field(lambda);
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 5, 21);
  for (const Ray& ray : rays) {
    const TransportResult res = solve_transport(f, ray, 1e-3, true);
    for (std::size_t k = 0; k < res.ts.size(); k += 97) {
      const CMat expected = rotation_closed_form(lambda, ray.point(res.ts[k]), ray.xi);
      EXPECT_NEAR(max_abs(res.us[k] - expected), 0.0, 1e-6);
    }
    EXPECT_NEAR(max_abs(res.exit() - rotation_closed_form(lambda, ray.point(ray.tau_plus), ray.xi)),
                0.0, 1e-6);
  }
}

TEST(Transport, PotentialFieldExitsAtIdentity) {
  const CallableField f = gradient_cross_field(lambda_flat_ball());
  const BallDomain ball = BallDomain::unit(3);
  for (const Ray& ray : sample_inward_boundary(ball, 20, 33))
    EXPECT_NEAR(max_abs(solve_transport(f, ray).exit() - CMat::identity(3)), 0.0, 1e-6);
}

TEST(Transport, FourthOrderConvergence) {
  // halving the step divides the exit error by ~16
  const GaussPolyMatrixField f = random_symmetric_field(15, {2, 1.0, 1.0, false});
  const BallDomain ball = BallDomain::unit(3);
  for (const Ray& ray : sample_inward_boundary(ball, 3, 19)) {
    if (ray.length() < 0.5) continue;  // skip near-grazing chords
    const double len = ray.length();
    const CMat ref = solve_transport(f, ray, len / 2048.0).exit();
    const double e0 = (solve_transport(f, ray, len / 64.0).exit() - ref).max_abs();
    const double e1 = (solve_transport(f, ray, len / 128.0).exit() - ref).max_abs();
    const double ratio = e0 / e1;
    EXPECT_GE(ratio, 12.0);
    EXPECT_LE(ratio, 20.0);
  }
}

TEST(Transport, StructuralInvariantsHold) {
  // U xi = xi and U* xi = xi hold for every field; U is unitary for
  // skew-hermitian fields
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 10, 55);
  const GaussPolyMatrixField skew = random_skew_hermitian_field(77);
  const GaussPolyMatrixField sym = random_symmetric_field(78);
  for (const Ray& ray : rays) {
    CVec axis(3);
    for (int i = 0; i < 3; ++i) axis[i] = ray.xi[i];
    for (const MatrixField* f : {static_cast<const MatrixField*>(&skew),
                                 static_cast<const MatrixField*>(&sym)}) {
      const CMat u = solve_transport(*f, ray).exit();
      EXPECT_NEAR(norm(apply(u, axis) - axis), 0.0, 1e-8);
      EXPECT_NEAR(norm(apply(u.adjoint(), axis) - axis), 0.0, 1e-8);
    }
    const CMat u = solve_transport(skew, ray).exit();
    EXPECT_NEAR(max_abs(u.adjoint() * u - CMat::identity(3)), 0.0, 1e-8);
  }
}

TEST(Transport, CompositionAlongSubChords) {
  // splitting a chord at a step node multiplies the two sub-solutions
  const GaussPolyMatrixField f = random_symmetric_field(99);
  const Ray full(Vec(0, 0, -1), UnitVec(Vec(0, 0, 1)), 0.0, 2.0);
  const double h = 2.0 / 256.0;
  const CMat u_full = solve_transport(f, full, h).exit();
  const CMat u1 = solve_transport(f, Ray(full.x, full.xi, 0.0, 1.0), h).exit();
  const CMat u2 = solve_transport(f, Ray(full.x, full.xi, 1.0, 2.0), h).exit();
  EXPECT_NEAR(max_abs(u_full - u2 * u1), 0.0, 1e-12);
}

TEST(Transport, WronskianMatchesDeterminant) {
  // exp(S[f]) = det Phi[f] along every chord
  const GaussPolyMatrixField f = random_symmetric_field(5, {2, 1.0, 0.5, false});
  const BallDomain ball = BallDomain::unit(3);
  for (const Ray& ray : sample_inward_boundary(ball, 5, 61)) {
    const cplx s = wronskian_data(f, ray);
    const cplx d = det(solve_transport(f, ray).exit());
    EXPECT_NEAR(std::abs(std::exp(s) - d), 0.0, 1e-6 * std::abs(d));
  }
}

TEST(Transport, WronskianGaussianOracle) {
  // f = exp(-|x|^2) I on the diameter chord: S = 2 int_{-1}^{1} e^{-t^2} dt
  const GaussPolyMatrixField f = gaussian_identity_field(1.0, 1.0);
  const Ray ray(Vec(0, 0, -1), UnitVec(Vec(0, 0, 1)), 0.0, 2.0);
  const double expected = 2.0 * std::sqrt(std::acos(-1.0)) * std::erf(1.0);
  EXPECT_NEAR(std::abs(wronskian_data(f, ray) - expected), 0.0, 1e-10);
}

TEST(Transport, LinearizedDataVanishesOnEqualFields) {
  const GaussPolyMatrixField f = random_symmetric_field(12);
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 5, 91);
  const BoundaryDataSet phi = forward_data(f, rays, 0.0, 1, "f");
  const BoundaryDataSet lin = linearized_data(phi, phi);
  EXPECT_EQ(lin.kind, "linearized");
  EXPECT_EQ(lin.field_id, "f|f");
  for (const auto& rec : lin.records) {
    ASSERT_TRUE(rec.ok);
    EXPECT_NEAR(max_abs(rec.matrix(3)), 0.0, 1e-12);
  }
  BoundaryDataSet shorter = phi;
  shorter.records.pop_back();
  EXPECT_THROW(linearized_data(phi, shorter), std::invalid_argument);
}

TEST(Transport, LinearizedMatchesWeightedLinearToFirstOrder) {
  // around zero background, Phi[eps f] - I agrees with eps * int P_xi f dt up
  // to O(eps^2)
  const GaussPolyMatrixField base = random_symmetric_field(44, {2, 1.0, 0.5, false});
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 8, 13);
  const double eps = 1e-3;
  const CallableField scaled(3, SymmetryClass::Symmetric,
                             [&](const Vec& x) { return eps * base.eval(x); });
  const WeightField unit = WeightField::unit(3);
  for (const Ray& ray : rays) {
    const CMat phi = solve_transport(scaled, ray).exit();
    const CMat lin = solve_weighted_linear(scaled, unit, unit, ray);
    EXPECT_NEAR(max_abs(phi - CMat::identity(3) - lin), 0.0, 1e-5);
    EXPECT_GE(1e-5, 1e-2 * eps);  // the bound separates O(eps^2) from the O(eps) signal
  }
}

TEST(Transport, SmallnessScalesLinearly) {
  const GaussPolyMatrixField base = random_symmetric_field(31);
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 10, 47);
  auto deviation = [&](double eps) {
    const CallableField scaled(3, SymmetryClass::Symmetric,
                               [&, eps](const Vec& x) { return eps * base.eval(x); });
    double m = 0.0;
    for (const Ray& ray : rays)
      m = std::max(m, max_abs(solve_transport(scaled, ray).exit() - CMat::identity(3)));
    return m;
  };
  const double m1 = deviation(1e-1), m2 = deviation(1e-2), m3 = deviation(1e-3);
  const double slope12 = std::log(m1 / m2) / std::log(10.0);
  const double slope23 = std::log(m2 / m3) / std::log(10.0);
  EXPECT_NEAR(slope12, 1.0, 0.1);
  EXPECT_NEAR(slope23, 1.0, 0.1);
}

TEST(Transport, NonFiniteFieldFlagsRecord) {
  const CallableField bad(3, SymmetryClass::General, [](const Vec& x) {
    CMat m(3);
    m(0, 0) = x[2] > 0.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    return m;
  });
  const Ray ray(Vec(0, 0, -1), UnitVec(Vec(0, 0, 1)), 0.0, 2.0);
  EXPECT_THROW(solve_transport(bad, ray), std::runtime_error);
  const BoundaryDataSet data = forward_data(bad, {ray}, 0.0, 1);
  ASSERT_EQ(data.records.size(), 1u);
  EXPECT_FALSE(data.records[0].ok);
  EXPECT_FALSE(data.records[0].error.empty());
  EXPECT_EQ(data.failed_count(), 1u);
}

TEST(Transport, GrazingChordIsIdentity) {
  const GaussPolyMatrixField f = random_symmetric_field(3);
  const Ray graze(Vec(1, 0, 0), UnitVec(Vec(0, 0, 1)), 0.0, 1e-9);
  EXPECT_NEAR(max_abs(solve_transport(f, graze).exit() - CMat::identity(3)), 0.0, 0.0);
  const WeightField unit = WeightField::unit(3);
  EXPECT_NEAR(max_abs(solve_weighted_linear(f, unit, unit, graze)), 0.0, 0.0);
  EXPECT_NEAR(std::abs(wronskian_data(f, graze)), 0.0, 0.0);
}

TEST(Transport, TrajectoryCoversChord) {
  const GaussPolyMatrixField f = random_symmetric_field(3);
  const Ray ray(Vec(0, 0, -1), UnitVec(Vec(0, 0, 1)), 0.0, 2.0);
  const TransportResult res = solve_transport(f, ray, 0.0, true);
  ASSERT_EQ(res.ts.size(), 2049u);  // default step = length / 2048
  ASSERT_EQ(res.us.size(), res.ts.size());
  EXPECT_DOUBLE_EQ(res.ts.front(), 0.0);
  EXPECT_DOUBLE_EQ(res.ts.back(), 2.0);
  EXPECT_NEAR(max_abs(res.us.front() - CMat::identity(3)), 0.0, 0.0);
  EXPECT_NEAR(max_abs(res.us.back() - res.exit()), 0.0, 0.0);
}

TEST(Transport, ParallelMatchesSerial) {
  const GaussPolyMatrixField f = random_symmetric_field(88);
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 12, 3);
  const BoundaryDataSet a = forward_data(f, rays, 0.0, 1);
  const BoundaryDataSet b = forward_data(f, rays, 0.0, 4);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i)
    for (std::size_t k = 0; k < a.records[i].value.size(); ++k)
      EXPECT_EQ(a.records[i].value[k], b.records[i].value[k]);
}

}  // namespace
