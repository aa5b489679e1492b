#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "ptomo/geometry.hpp"

namespace {

using namespace ptomo;

TEST(ChordTimes, DiameterAndCenter) {
  const BallDomain ball = BallDomain::unit(3);
  // base on the boundary, direction straight across
  const ChordTimes a = chord_times(ball, Vec(0, 0, -1), UnitVec(Vec(0, 0, 1)));
  EXPECT_NEAR(a.tau_minus, 0.0, 1e-12);
  EXPECT_NEAR(a.tau_plus, 2.0, 1e-12);
  // base at the center: symmetric chord
  const ChordTimes b = chord_times(ball, Vec(0, 0, 0), UnitVec(Vec(1, 0, 0)));
  EXPECT_NEAR(b.tau_minus, -1.0, 1e-12);
  EXPECT_NEAR(b.tau_plus, 1.0, 1e-12);
}

TEST(ChordTimes, OffCenterChordLength) {
  // chord at impact parameter d has length 2 sqrt(1-d^2)
  const BallDomain ball = BallDomain::unit(3);
  const double d = 0.6;
  const ChordTimes c = chord_times(ball, Vec(d, 0, 0), UnitVec(Vec(0, 1, 0)));
  EXPECT_NEAR(c.tau_plus - c.tau_minus, 2.0 * std::sqrt(1.0 - d * d), 1e-12);
}

TEST(ChordTimes, TangentDegenerates) {
  const BallDomain ball = BallDomain::unit(3);
  const ChordTimes c = chord_times(ball, Vec(1, 0, 0), UnitVec(Vec(0, 0, 1)));
  EXPECT_NEAR(c.tau_plus - c.tau_minus, 0.0, 1e-6);
}

TEST(ChordTimes, OutsideThrows) {
  const BallDomain ball = BallDomain::unit(3);
  EXPECT_THROW(chord_times(ball, Vec(2, 0, 0), UnitVec(Vec(0, 0, 1))), std::invalid_argument);
}

TEST(BoundarySampling, GeometryInvariants) {
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 500, 42);
  ASSERT_EQ(rays.size(), 500u);
  for (const Ray& r : rays) {
    EXPECT_NEAR(norm(r.x - ball.center), ball.radius, 1e-12);  // starts on the boundary
    EXPECT_DOUBLE_EQ(r.tau_minus, 0.0);
    const Vec nu = r.x - ball.center;  // outward normal direction (radius 1)
    EXPECT_LE(dot(r.xi.vec(), nu), 1e-12);  // inward pointing
    // exit point back on the sphere
    EXPECT_NEAR(norm(r.point(r.tau_plus) - ball.center), ball.radius, 1e-9);
    // chord formula tau_plus = -2 <nu, xi>
    EXPECT_NEAR(r.tau_plus, -2.0 * dot(nu, r.xi.vec()), 1e-9);
  }
}

TEST(BoundarySampling, MeanEntryCosine) {
  // uniform inward hemisphere: <nu, xi> is uniform on [-1, 0] at n=3, so the
  // sample mean sits near -1/2 (sigma of the mean ~ 0.0065 at 2000 rays)
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 2000, 7);
  double acc = 0.0;
  for (const Ray& r : rays) acc += dot(r.x - ball.center, r.xi.vec());
  EXPECT_NEAR(acc / 2000.0, -0.5, 0.03);
}

TEST(BoundarySampling, MeanEntryCosineFourD) {
  // at n=4 the entry cosine has density ~ sqrt(1-c^2) on [-1,0]:
  // mean = -4/(3 pi)
  const BallDomain ball = BallDomain::unit(4);
  const auto rays = sample_inward_boundary(ball, 4000, 7);
  double acc = 0.0;
  for (const Ray& r : rays) acc += dot(r.x - ball.center, r.xi.vec());
  EXPECT_NEAR(acc / 4000.0, -4.0 / (3.0 * 3.141592653589793), 0.03);
}

TEST(BoundarySampling, Deterministic) {
  const BallDomain ball = BallDomain::unit(3);
  const auto a = sample_inward_boundary(ball, 50, 99);
  const auto b = sample_inward_boundary(ball, 50, 99);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_DOUBLE_EQ(a[i].tau_plus, b[i].tau_plus);
    for (int k = 0; k < 3; ++k) {
      EXPECT_DOUBLE_EQ(a[i].x[k], b[i].x[k]);
      EXPECT_DOUBLE_EQ(a[i].xi[k], b[i].xi[k]);
    }
  }
}

TEST(Frame, OrthonormalAndTransverse) {
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const UnitVec xi = rng.unit_sphere(3);
    const auto [e1, e2] = orthonormal_frame(xi);
    EXPECT_NEAR(norm(e1), 1.0, 1e-12);
    EXPECT_NEAR(norm(e2), 1.0, 1e-12);
    EXPECT_NEAR(dot(e1, e2), 0.0, 1e-12);
    EXPECT_NEAR(dot(e1, xi.vec()), 0.0, 1e-12);
    EXPECT_NEAR(dot(e2, xi.vec()), 0.0, 1e-12);
  }
}

TEST(TangentLines, FootPointInDisk) {
  const auto lines = tangent_bundle_lines(300, 2.5, 31);
  ASSERT_EQ(lines.size(), 300u);
  for (const TangentLine& l : lines) {
    EXPECT_NEAR(dot(l.x, l.xi.vec()), 0.0, 1e-10);
    EXPECT_LE(norm(l.x), 2.5 + 1e-12);
  }
}

TEST(RaysCsv, WritesHeaderAndRows) {
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 10, 1);
  const std::string path = "geometry_test_rays.csv";
  write_rays_csv(rays, path);
  std::ifstream f(path);
  ASSERT_TRUE(bool(f));
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "x1,x2,x3,xi1,xi2,xi3,tau_minus,tau_plus");
  int rows = 0;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 10);
  std::remove(path.c_str());
}

}  // namespace
