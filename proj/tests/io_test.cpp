#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ptomo/boundary_io.hpp"
#include "ptomo/families.hpp"
#include "ptomo/grid_io.hpp"

namespace {

using namespace ptomo;

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), std::streamsize(bytes.size()));
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

TEST(GridFieldIo, RoundTripIsByteIdentical) {
  const GridField g =
      GridField::sample(random_skew_hermitian_field(5), GridSpec::centered_cube(5, 1.2));
  TempFile a("grid_a.ptf"), b("grid_b.ptf");
  write_grid_field(a.path, g);
  const GridField back = read_grid_field(a.path);
  EXPECT_EQ(back.dim(), g.dim());
  EXPECT_EQ(back.symmetry(), g.symmetry());
  EXPECT_TRUE(back.spec() == g.spec());
  EXPECT_EQ(back.values(), g.values());
  write_grid_field(b.path, back);
  EXPECT_EQ(file_checksum(a.path), file_checksum(b.path));
  EXPECT_EQ(slurp(a.path), slurp(b.path));
}

TEST(GridFieldIo, ScalarGridRoundTrips) {
  // n = 1 stores one complex value per node (used for recovered potentials)
  const GridSpec spec = GridSpec::centered_cube(4, 1.0);
  std::vector<cplx> values(spec.node_count());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = cplx(double(i) * 0.25, -double(i));
  const GridField g(1, SymmetryClass::General, spec, values);
  TempFile a("grid_scalar.ptf");
  write_grid_field(a.path, g);
  const GridField back = read_grid_field(a.path);
  EXPECT_EQ(back.dim(), 1);
  EXPECT_EQ(back.values(), values);
  EXPECT_TRUE(back.spec() == spec);
}

TEST(GridFieldIo, RejectsDamagedFiles) {
  const GridField g =
      GridField::sample(random_symmetric_field(6), GridSpec::centered_cube(3, 1.0));
  TempFile a("grid_damage.ptf");
  write_grid_field(a.path, g);
  const std::string good = slurp(a.path);

  EXPECT_THROW(read_grid_field("grid_missing.ptf"), std::runtime_error);

  std::string bad = good;
  bad[0] = 'X';
  spit(a.path, bad);
  EXPECT_THROW(read_grid_field(a.path), std::runtime_error);

  bad = good;
  bad[4] = 7;  // dimension byte outside the accepted 1..4 range
  spit(a.path, bad);
  EXPECT_THROW(read_grid_field(a.path), std::runtime_error);

  spit(a.path, good.substr(0, 10));
  EXPECT_THROW(read_grid_field(a.path), std::runtime_error);

  spit(a.path, good.substr(0, good.size() - 5));
  EXPECT_THROW(read_grid_field(a.path), std::runtime_error);
}

TEST(FileChecksum, MatchesKnownFnv1aVectors) {
  TempFile a("checksum_probe.bin");
  spit(a.path, "");
  EXPECT_EQ(file_checksum(a.path), "cbf29ce484222325");
  spit(a.path, "a");
  EXPECT_EQ(file_checksum(a.path), "af63dc4c8601ec8c");
  spit(a.path, "foobar");
  EXPECT_EQ(file_checksum(a.path), "85944171f73967e8");
  EXPECT_EQ(file_checksum(a.path), file_checksum(a.path));
}

TEST(BoundaryIo, TransportRoundTripIsByteIdentical) {
  const std::vector<Ray> rays = sample_inward_boundary(BallDomain::unit(3), 6, 17);
  BoundaryDataSet data = forward_data(random_skew_hermitian_field(18), rays, 0.01, 1, "probe-18");
  TempFile a("boundary_a.csv"), b("boundary_b.csv");
  write_boundary_data(a.path, data);
  const BoundaryDataSet back = read_boundary_data(a.path);
  EXPECT_EQ(back.kind, "transport");
  EXPECT_EQ(back.field_id, "probe-18");
  EXPECT_EQ(back.value_dim, 3);
  EXPECT_EQ(back.space_dim, 3);
  EXPECT_DOUBLE_EQ(back.step, 0.01);
  ASSERT_EQ(back.records.size(), data.records.size());
  for (std::size_t r = 0; r < data.records.size(); ++r) {
    const BoundaryRecord& orig = data.records[r];
    const BoundaryRecord& copy = back.records[r];
    EXPECT_EQ(copy.ok, orig.ok);
    EXPECT_EQ(copy.value, orig.value);
    for (int ax = 0; ax < 3; ++ax) {
      EXPECT_EQ(copy.ray.x[ax], orig.ray.x[ax]);
      EXPECT_EQ(copy.ray.xi[ax], orig.ray.xi[ax]);
    }
    EXPECT_EQ(copy.ray.tau_minus, orig.ray.tau_minus);
    EXPECT_EQ(copy.ray.tau_plus, orig.ray.tau_plus);
  }
  write_boundary_data(b.path, back);
  EXPECT_EQ(slurp(a.path), slurp(b.path));
}

TEST(BoundaryIo, FailedRecordsKeepSanitizedErrors) {
  const std::vector<Ray> rays = sample_inward_boundary(BallDomain::unit(3), 3, 23);
  BoundaryDataSet data;
  data.kind = "transport";
  data.field_id = "with \"quotes\" and\nnewline";
  for (const Ray& r : rays) data.records.emplace_back(r, 3);
  data.records[1].ok = false;
  data.records[1].error = "blew up, mid-chord\nwith \"details\"";
  TempFile a("boundary_failed_a.csv"), b("boundary_failed_b.csv");
  write_boundary_data(a.path, data);
  const BoundaryDataSet back = read_boundary_data(a.path);
  EXPECT_EQ(back.field_id, data.field_id);
  EXPECT_EQ(back.failed_count(), 1u);
  EXPECT_FALSE(back.records[1].ok);
  EXPECT_EQ(back.records[1].error, "blew up; mid-chord;with ;details;");
  EXPECT_TRUE(back.records[0].ok);
  EXPECT_TRUE(back.records[0].error.empty());
  write_boundary_data(b.path, back);
  EXPECT_EQ(slurp(a.path), slurp(b.path));
}

TEST(BoundaryIo, ScalarValueRecordsRoundTrip) {
  const std::vector<Ray> rays = sample_inward_boundary(BallDomain::unit(3), 4, 29);
  const BoundaryDataSet data = wronskian_data(random_skew_hermitian_field(30), rays, 0.02);
  EXPECT_EQ(data.kind, "wronskian");
  EXPECT_EQ(data.value_dim, 1);
  TempFile a("boundary_scalar.csv");
  write_boundary_data(a.path, data);
  const BoundaryDataSet back = read_boundary_data(a.path);
  EXPECT_EQ(back.value_dim, 1);
  ASSERT_EQ(back.records.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(back.records[r].value, data.records[r].value);
}

TEST(BoundaryIo, RejectsMalformedFiles) {
  EXPECT_THROW(read_boundary_data("boundary_missing.csv"), std::runtime_error);

  TempFile a("boundary_bad.csv");
  spit(a.path, "{\"format\":\"something-else\"}\nx1\n");
  EXPECT_THROW(read_boundary_data(a.path), std::runtime_error);

  const std::vector<Ray> rays = sample_inward_boundary(BallDomain::unit(3), 2, 31);
  BoundaryDataSet data;
  for (const Ray& r : rays) data.records.emplace_back(r, 3);
  write_boundary_data(a.path, data);
  const std::string good = slurp(a.path);

  // a truncated last row has too few cells
  spit(a.path, good.substr(0, good.size() - 40));
  EXPECT_THROW(read_boundary_data(a.path), std::runtime_error);

  // an extra row contradicts the declared record count
  const std::size_t second_row = good.rfind('\n', good.size() - 2);
  spit(a.path, good + good.substr(second_row + 1));
  EXPECT_THROW(read_boundary_data(a.path), std::runtime_error);
}

}  // namespace
