#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "ptomo/families.hpp"
#include "ptomo/geometry.hpp"
#include "ptomo/xray.hpp"

namespace {

using namespace ptomo;

const double pi = std::acos(-1.0);

TEST(RayTransform, GaussianOracle) {
  // f = exp(-|x|^2) I: <f xi, xi> = exp(-|x|^2) along any unit direction, so
  // a line at distance d from the origin integrates to sqrt(pi) exp(-d^2)
  const GaussPolyMatrixField f = gaussian_identity_field(1.0, 1.0);
  const double R = f.support_radius(1e-15);
  const TangentLine central(Vec(0, 0, 0), UnitVec(Vec(0, 0, 1)));
  EXPECT_NEAR(std::abs(ray_transform(f, central, R) - std::sqrt(pi)), 0.0, 1e-10);
  const TangentLine offset(Vec(0.7, 0, 0), UnitVec(Vec(0, 1, 0)));
  EXPECT_NEAR(std::abs(ray_transform(f, offset, R) - std::sqrt(pi) * std::exp(-0.49)), 0.0, 1e-10);
}

TEST(STransform, GaussianOracle) {
  // tr(pi f pi) = (n-1) exp(-|x|^2) for f = exp(-|x|^2) I
  const GaussPolyMatrixField f = gaussian_identity_field(1.0, 1.0);
  const double R = f.support_radius(1e-15);
  const TangentLine central(Vec(0, 0, 0), UnitVec(Vec(1, 0, 0)));
  EXPECT_NEAR(std::abs(s_transform(f, central, R) - 2.0 * std::sqrt(pi)), 0.0, 1e-10);
}

TEST(STransform, RequiresSymmetricField) {
  const GaussPolyMatrixField skew = random_skew_hermitian_field(3);
  const TangentLine line(Vec(0, 0, 0), UnitVec(Vec(0, 0, 1)));
  EXPECT_THROW(s_transform(skew, line, 5.0), std::domain_error);
}

TEST(STransform, IdentityScalingRelations) {
  // S[lambda I] = 2 I[lambda I] and S[ftilde] = -I[ftilde] for traceless
  // symmetric ftilde
  const GaussPolyMatrixField f = random_symmetric_field(6, {2, 1.0, 1.0, false});
  const double R = f.support_radius(1e-15);
  const auto lines = tangent_bundle_lines(10, 1.5, 17);

  const GaussPolyTraceSplit split = trace_split(f);
  const GaussPolyMatrixField lam_id = lambda_identity_field(split.lambda);
  for (const TangentLine& line : lines) {
    const cplx s_id = s_transform(lam_id, line, R);
    const cplx i_id = ray_transform(lam_id, line, R);
    EXPECT_NEAR(std::abs(s_id - 2.0 * i_id), 0.0, 1e-10);

    const cplx s_t = s_transform(split.traceless, line, R);
    const cplx i_t = ray_transform(split.traceless, line, R);
    EXPECT_NEAR(std::abs(s_t + i_t), 0.0, 1e-10);

    // the split is additive in both transforms
    EXPECT_NEAR(std::abs(s_transform(f, line, R) - s_id - s_t), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(ray_transform(f, line, R) - i_id - i_t), 0.0, 1e-9);
  }
}

TEST(TraceSplit, PointwiseAndFieldLevelAgree) {
  const GaussPolyMatrixField f = random_symmetric_field(11);
  const GaussPolyTraceSplit split = trace_split(f);
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto [t, lam] = trace_split(f.eval(x));
    EXPECT_NEAR(std::abs(t.trace()), 0.0, 1e-13);
    EXPECT_NEAR((split.traceless.eval(x) - t).max_abs(), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(split.lambda.eval(x) - lam), 0.0, 1e-13);
    // recomposition
    CMat re = t;
    for (int i = 0; i < 3; ++i) re(i, i) += lam;
    EXPECT_NEAR((re - f.eval(x)).max_abs(), 0.0, 1e-13);
  }
}

TEST(LineSample, ValidatesInput) {
  const TangentLine line(Vec(0, 0, 0), UnitVec(Vec(0, 0, 1)));
  EXPECT_THROW(LineSample(line, -1.0, 100), std::invalid_argument);
  EXPECT_THROW(LineSample(line, 1.0, 1), std::invalid_argument);
  EXPECT_NEAR(line_half_length(TangentLine(Vec(0.6, 0.8, 0), UnitVec(Vec(0, 0, 1))), 2.0), 3.0,
              1e-12);
}

TEST(Sinogram, RowsAndCsv) {
  const GaussPolyMatrixField f = random_symmetric_field(4);
  const auto lines = tangent_bundle_lines(6, 1.0, 9);
  const auto rows = sinogram(f, lines, f.support_radius(1e-14), 512);
  ASSERT_EQ(rows.size(), 6u);

  const std::string path = "xray_test_sinogram.csv";
  write_sinogram_csv(rows, path);
  std::ifstream in(path);
  ASSERT_TRUE(bool(in));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x1,x2,x3,xi1,xi2,xi3,s_re,s_im,i_re,i_im");
  int count = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++count;
  EXPECT_EQ(count, 6);
  std::remove(path.c_str());
}

}  // namespace
