#pragma once

// Grid-field container "PTF1" (little-endian):
//   magic "PTF1", u32 n, u32 dims[3], f64 origin[3], f64 spacing,
//   u8 symmetry class (0 general, 1 symmetric, 2 skew-Hermitian),
//   then node-major (x outer, z inner), per node n*n row-major complex
//   entries as (re, im) f64 pairs.
// Write/read round trips are byte-identical.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ptomo/fields.hpp"

namespace ptomo {

inline void write_grid_field(const std::string& path, const GridField& g) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write("PTF1", 4);
  const std::uint32_t n = std::uint32_t(g.dim());
  const GridSpec& s = g.spec();
  std::uint32_t dims[3] = {std::uint32_t(s.dims[0]), std::uint32_t(s.dims[1]),
                           std::uint32_t(s.dims[2])};
  double origin[3] = {s.origin[0], s.origin[1], s.origin[2]};
  const std::uint8_t sym = std::uint8_t(g.symmetry());
  f.write(reinterpret_cast<const char*>(&n), 4);
  f.write(reinterpret_cast<const char*>(dims), 12);
  f.write(reinterpret_cast<const char*>(origin), 24);
  f.write(reinterpret_cast<const char*>(&s.spacing), 8);
  f.write(reinterpret_cast<const char*>(&sym), 1);
  static_assert(sizeof(cplx) == 16, "complex<double> must be two packed f64");
  f.write(reinterpret_cast<const char*>(g.values().data()),
          std::streamsize(g.values().size() * sizeof(cplx)));
  if (!f) throw std::runtime_error("short write: " + path);
}

inline GridField read_grid_field(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "PTF1", 4) != 0)
    throw std::runtime_error("not a PTF1 grid field file: " + path);
  std::uint32_t n = 0, dims[3] = {0, 0, 0};
  double origin[3] = {0, 0, 0}, spacing = 0.0;
  std::uint8_t sym = 0;
  f.read(reinterpret_cast<char*>(&n), 4);
  f.read(reinterpret_cast<char*>(dims), 12);
  f.read(reinterpret_cast<char*>(origin), 24);
  f.read(reinterpret_cast<char*>(&spacing), 8);
  f.read(reinterpret_cast<char*>(&sym), 1);
  if (!f) throw std::runtime_error("corrupt PTF1 header: " + path);
  if (n < 1 || n > 4 || sym > 2) throw std::runtime_error("invalid PTF1 header fields: " + path);
  GridSpec spec({int(dims[0]), int(dims[1]), int(dims[2])}, Vec(origin[0], origin[1], origin[2]),
                spacing);
  std::vector<cplx> values(spec.node_count() * n * n);
  f.read(reinterpret_cast<char*>(values.data()), std::streamsize(values.size() * sizeof(cplx)));
  if (!f) throw std::runtime_error("short read: " + path);
  return GridField(int(n), SymmetryClass(sym), spec, std::move(values));
}

// FNV-1a 64-bit checksum of a file's bytes, as fixed-width hex.
inline std::string file_checksum(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize got = f.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= std::uint8_t(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

}  // namespace ptomo
