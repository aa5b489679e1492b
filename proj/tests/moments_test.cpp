#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ptomo/families.hpp"
#include "ptomo/moments.hpp"

namespace {

using namespace ptomo;

const double pi = std::acos(-1.0);

TEST(Moments, ZeroOrderGaussianOracle) {
  // int exp(-|x|^2) dx = pi^{3/2} on each diagonal component
  const GaussPolyMatrixField f = gaussian_identity_field(1.0, 1.0);
  const MomentTable t = moments(f, 0, 8.0, 96);
  const double expected = std::pow(pi, 1.5);
  for (int c = 0; c < 3; ++c)
    EXPECT_NEAR(std::abs(t.lookup(0, c, c, {0, 0, 0}) - expected), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(t.lookup(0, 0, 1, {0, 0, 0})), 0.0, 1e-12);
  // scale = int |f|_F = sqrt(3) pi^{3/2}
  EXPECT_NEAR(t.scale, std::sqrt(3.0) * expected, 1e-8);
}

TEST(Moments, ManufacturedFirstMomentOracle) {
  // f_12 = f_21 = (2 / pi^{3/2}) x3 exp(-|x|^2): mu_12,3 = 1 exactly
  std::array<std::array<GaussPoly, 4>, 4> e;
  const GaussPoly g(Poly3::monomial(0, 0, 1, cplx(2.0 / std::pow(pi, 1.5))), 1.0);
  e[0][1] = g;
  e[1][0] = g;
  const GaussPolyMatrixField f(3, SymmetryClass::Symmetric, e);
  const MomentTable t = moments(f, 1, 8.0, 96);
  EXPECT_NEAR(std::abs(t.first(0, 1, 2) - cplx(1.0)), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(t.first(0, 1, 0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(t.first(0, 1, 1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(t.first(1, 1, 2)), 0.0, 1e-12);
  // lookup is symmetric in (j,k)
  EXPECT_EQ(t.first(1, 0, 2), t.first(0, 1, 2));
}

TEST(Moments, KernelFieldMomentsVanish) {
  const GaussPolyMatrixField f = random_kernel_field(55, {2, 1.0, 1.0, false});
  const MomentTable t = moments(f, 1, 8.0, 96);
  ASSERT_GT(t.scale, 0.0);

  const ZeroOrderCheck z = zero_order_recovery_check(t);
  EXPECT_EQ(z.status, ZeroOrderCheck::Status::Pass);
  EXPECT_LE(z.max_abs, 1e-6 * t.scale);

  const auto combos = first_order_combos(t);
  ASSERT_EQ(combos.size(), 15u);
  for (const auto& c : combos) EXPECT_LE(std::abs(c.value), 1e-6 * t.scale);

  const KernelMomentFit fit = kernel_moment_fit(t);
  EXPECT_LE(fit.residual, 1e-6 * t.scale);
  for (const cplx& v : fit.cross) EXPECT_LE(std::abs(v), 1e-6 * t.scale);
}

TEST(Moments, NonKernelFieldIsFlagged) {
  const GaussPolyMatrixField f = gaussian_identity_field(1.0, 1.0);
  const MomentTable t = moments(f, 0, 8.0, 64);
  const ZeroOrderCheck z = zero_order_recovery_check(t);
  EXPECT_EQ(z.status, ZeroOrderCheck::Status::NotApplicable);
  EXPECT_GT(z.max_abs, 1e-2 * t.scale);
}

TEST(Moments, FitRecoversPatternExactly) {
  // synthetic table following the three-parameter kernel pattern
  const std::array<cplx, 3> a = {cplx(2.0, 0.5), cplx(-1.0, 0.0), cplx(0.5, -1.5)};
  struct Row {
    int j, k;
    std::array<cplx, 3> mu;  // per axis
  };
  const Row pattern[6] = {
      {0, 0, {a[0], -a[1], -a[2]}}, {0, 1, {a[1], a[0], cplx(0.0)}},
      {0, 2, {a[2], cplx(0.0), a[0]}}, {1, 1, {-a[0], a[1], -a[2]}},
      {1, 2, {cplx(0.0), a[2], a[1]}}, {2, 2, {-a[0], -a[1], a[2]}}};
  MomentTable t;
  t.scale = 1.0;
  for (const Row& r : pattern)
    for (int axis = 0; axis < 3; ++axis) {
      MomentRow m;
      m.m = 1;
      m.j = r.j;
      m.k = r.k;
      m.alpha = {axis == 0 ? 1 : 0, axis == 1 ? 1 : 0, axis == 2 ? 1 : 0};
      m.value = r.mu[static_cast<size_t>(axis)];
      t.rows.push_back(m);
    }
  const KernelMomentFit fit = kernel_moment_fit(t);
  for (int p = 0; p < 3; ++p)
    EXPECT_NEAR(std::abs(fit.a[static_cast<size_t>(p)] - a[static_cast<size_t>(p)]), 0.0, 1e-13);
  EXPECT_NEAR(fit.residual, 0.0, 1e-13);
  for (const cplx& v : fit.cross) EXPECT_NEAR(std::abs(v), 0.0, 1e-13);

  // the 15 vanishing combinations hold on the pattern as well
  for (const auto& c : first_order_combos(t)) EXPECT_NEAR(std::abs(c.value), 0.0, 1e-13);
}

TEST(Moments, TableLookupAndValidation) {
  const GaussPolyMatrixField f = gaussian_identity_field(1.0, 1.0);
  const MomentTable t = moments(f, 1, 4.0, 32);
  EXPECT_EQ(t.rows.size(), 24u);  // (1 + 3 multi-indices) x 6 components
  EXPECT_THROW(t.lookup(2, 0, 0, {2, 0, 0}), std::out_of_range);
  EXPECT_THROW(moments(random_skew_hermitian_field(1), 0, 4.0), std::domain_error);
  EXPECT_THROW(moments(f, 5, 4.0), std::invalid_argument);
  EXPECT_THROW(moments(f, 0, -1.0), std::invalid_argument);
}

TEST(Moments, CsvExport) {
  const GaussPolyMatrixField f = gaussian_identity_field(1.0, 1.0);
  const MomentTable t = moments(f, 1, 4.0, 32);
  const std::string path = "moments_test.csv";
  write_moments_csv(t, path);
  std::ifstream in(path);
  ASSERT_TRUE(bool(in));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "m,j,k,a1,a2,a3,re,im");
  int count = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++count;
  EXPECT_EQ(count, 24);
  std::remove(path.c_str());
}

}  // namespace
