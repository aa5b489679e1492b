#pragma once

// Linearized reconstruction. The data of the weighted linear problem is, per
// ray, the chord quadrature of p (P_xi f) q. On a multilinear voxel basis
// with unit weights the row functional factors: xi is constant along a
// straight chord, so
//   entry(i,j) = sum_v hat(v) * sum_k c(v,k) * [P_xi B_k]_(i,j),
// where hat(v) is the chord integral of the scalar interpolation hat of node
// v and B_k runs over a real basis of the unknown class. The operator is
// stored in that factored form (per-ray hat lists plus a per-ray projection
// matrix); general weights fall back to explicit sparse rows. The quadrature
// nodes and Simpson weights replicate solve_weighted_linear exactly, so an
// operator column matches the direct solve on the corresponding basis field.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptomo/decompose.hpp"
#include "ptomo/fields.hpp"
#include "ptomo/geometry.hpp"
#include "ptomo/linalg.hpp"
#include "ptomo/parallel.hpp"
#include "ptomo/rng.hpp"
#include "ptomo/tensor_ops.hpp"
#include "ptomo/transport.hpp"

namespace ptomo {

// Regular node grid over an n-cube, n in {3,4}; n = 3 matches GridSpec.
struct HyperGrid {
  int n = 3;
  std::array<int, 4> dims{1, 1, 1, 1};
  std::array<double, 4> origin{0.0, 0.0, 0.0, 0.0};
  double spacing = 1.0;

  static HyperGrid from_grid_spec(const GridSpec& s) {
    HyperGrid g;
    g.n = 3;
    g.dims = {s.dims[0], s.dims[1], s.dims[2], 1};
    g.origin = {s.origin[0], s.origin[1], s.origin[2], 0.0};
    g.spacing = s.spacing;
    return g;
  }

  // m nodes per axis on [-half, half]^n
  static HyperGrid centered_cube(int n, int m, double half) {
    if (n != 3 && n != 4) throw std::invalid_argument("HyperGrid supports n in {3,4}");
    if (m < 2) throw std::invalid_argument("HyperGrid needs at least 2 nodes per axis");
    HyperGrid g;
    g.n = n;
    g.spacing = 2.0 * half / (m - 1);
    for (int ax = 0; ax < n; ++ax) {
      g.dims[static_cast<size_t>(ax)] = m;
      g.origin[static_cast<size_t>(ax)] = -half;
    }
    return g;
  }

  GridSpec to_grid_spec() const {
    if (n != 3) throw std::invalid_argument("to_grid_spec requires n = 3");
    GridSpec s;
    s.dims[0] = dims[0];
    s.dims[1] = dims[1];
    s.dims[2] = dims[2];
    s.origin = Vec(origin[0], origin[1], origin[2]);
    s.spacing = spacing;
    return s;
  }

  std::size_t node_count() const {
    std::size_t c = 1;
    for (int ax = 0; ax < n; ++ax) c *= static_cast<size_t>(dims[static_cast<size_t>(ax)]);
    return c;
  }

  std::size_t node_index(const std::array<int, 4>& i) const {
    std::size_t id = 0;
    for (int ax = 0; ax < n; ++ax)
      id = id * static_cast<size_t>(dims[static_cast<size_t>(ax)]) + static_cast<size_t>(i[static_cast<size_t>(ax)]);
    return id;
  }

  Vec node_point(const std::array<int, 4>& i) const {
    Vec x(n);
    for (int ax = 0; ax < n; ++ax)
      x[ax] = origin[static_cast<size_t>(ax)] + i[static_cast<size_t>(ax)] * spacing;
    return x;
  }

  std::array<int, 4> node_coords(std::size_t id) const {
    std::array<int, 4> i{0, 0, 0, 0};
    for (int ax = n - 1; ax >= 0; --ax) {
      i[static_cast<size_t>(ax)] = int(id % static_cast<size_t>(dims[static_cast<size_t>(ax)]));
      id /= static_cast<size_t>(dims[static_cast<size_t>(ax)]);
    }
    return i;
  }
};

// Real parametrization of the voxel unknowns.
enum class UnknownClass { RealSymmetric, SkewHermitian, GeneralComplex };

inline const char* to_string(UnknownClass c) {
  switch (c) {
    case UnknownClass::RealSymmetric: return "real-symmetric";
    case UnknownClass::SkewHermitian: return "skew-hermitian";
    case UnknownClass::GeneralComplex: return "general-complex";
  }
  return "?";
}

inline int components_per_node(UnknownClass c, int n) {
  switch (c) {
    case UnknownClass::RealSymmetric: return n * (n + 1) / 2;
    case UnknownClass::SkewHermitian: return n * n;
    case UnknownClass::GeneralComplex: return 2 * n * n;
  }
  return 0;
}

inline SymmetryClass to_symmetry_class(UnknownClass c) {
  switch (c) {
    case UnknownClass::RealSymmetric: return SymmetryClass::Symmetric;
    case UnknownClass::SkewHermitian: return SymmetryClass::SkewHermitian;
    case UnknownClass::GeneralComplex: return SymmetryClass::General;
  }
  return SymmetryClass::General;
}

// k-th basis matrix of the class. Orders: diagonals then upper pairs
// (lexicographic). Symmetric pairs use E_ij + E_ji; the skew-Hermitian class
// lists i*E_kk, then per pair E_ij - E_ji and i(E_ij + E_ji); the general
// class lists E_ij and i*E_ij per entry, row-major.
inline CMat unknown_basis_matrix(UnknownClass c, int n, int k) {
  CMat m = CMat::zero(n);
  const cplx iu(0.0, 1.0);
  if (c == UnknownClass::RealSymmetric) {
    if (k < n) {
      m(k, k) = 1.0;
      return m;
    }
    int idx = n;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++idx)
        if (idx == k) {
          m(i, j) = 1.0;
          m(j, i) = 1.0;
          return m;
        }
  } else if (c == UnknownClass::SkewHermitian) {
    if (k < n) {
      m(k, k) = iu;
      return m;
    }
    int idx = n;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, idx += 2) {
        if (idx == k) {
          m(i, j) = 1.0;
          m(j, i) = -1.0;
          return m;
        }
        if (idx + 1 == k) {
          m(i, j) = iu;
          m(j, i) = iu;
          return m;
        }
      }
  } else {
    const int e = k / 2, i = e / n, j = e % n;
    if (i < n) {
      m(i, j) = (k % 2) ? iu : cplx(1.0);
      return m;
    }
  }
  throw std::out_of_range("unknown_basis_matrix index");
}

// Projection of a matrix onto the class coefficients; exact for members.
inline void matrix_to_coefficients(UnknownClass c, int n, const CMat& m, double* out) {
  if (c == UnknownClass::RealSymmetric) {
    for (int k = 0; k < n; ++k) out[k] = m(k, k).real();
    int idx = n;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++idx) out[idx] = 0.5 * (m(i, j).real() + m(j, i).real());
  } else if (c == UnknownClass::SkewHermitian) {
    for (int k = 0; k < n; ++k) out[k] = m(k, k).imag();
    int idx = n;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, idx += 2) {
        out[idx] = 0.5 * (m(i, j).real() - m(j, i).real());
        out[idx + 1] = 0.5 * (m(i, j).imag() + m(j, i).imag());
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        out[2 * (i * n + j)] = m(i, j).real();
        out[2 * (i * n + j) + 1] = m(i, j).imag();
      }
  }
}

inline CMat matrix_from_coefficients(UnknownClass c, int n, const double* in) {
  CMat m = CMat::zero(n);
  const int d = components_per_node(c, n);
  for (int k = 0; k < d; ++k) {
    if (in[k] == 0.0) continue;
    CMat b = unknown_basis_matrix(c, n, k);
    b *= in[k];
    m += b;
  }
  return m;
}

// Node samples of a field, stacked as class coefficients.
inline std::vector<double> coefficients_from_field(const MatrixField& f, const HyperGrid& grid,
                                                   UnknownClass cls) {
  if (f.dim() != grid.n) throw std::invalid_argument("coefficients_from_field dimension mismatch");
  const int d = components_per_node(cls, grid.n);
  std::vector<double> c(grid.node_count() * static_cast<size_t>(d), 0.0);
  for (std::size_t id = 0; id < grid.node_count(); ++id)
    matrix_to_coefficients(cls, grid.n, f.eval(grid.node_point(grid.node_coords(id))),
                           c.data() + id * static_cast<size_t>(d));
  return c;
}

inline GridField field_from_coefficients(const HyperGrid& grid, UnknownClass cls,
                                         const std::vector<double>& c) {
  if (grid.n != 3) throw std::invalid_argument("field_from_coefficients requires n = 3");
  const int d = components_per_node(cls, 3);
  if (c.size() != grid.node_count() * static_cast<size_t>(d))
    throw std::invalid_argument("coefficient vector has wrong size");
  std::vector<cplx> values(grid.node_count() * 9);
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    const CMat m = matrix_from_coefficients(cls, 3, c.data() + id * static_cast<size_t>(d));
    for (int e = 0; e < 9; ++e) values[id * 9 + static_cast<size_t>(e)] = m.data()[e];
  }
  return GridField(3, to_symmetry_class(cls), grid.to_grid_spec(), std::move(values));
}

namespace detail {

// Multilinear hat weights at x, replicating grid-field evaluation: any axis
// outside [0, dims-1] makes the point contribute nothing; the boundary cell
// is clamped so the far face evaluates with local coordinate 1.
struct HatCorners {
  int count = 0;                       // 2^n or 0
  std::array<std::size_t, 16> index;   // node ids
  std::array<double, 16> weight;
};

inline void hat_corners(const HyperGrid& g, const Vec& x, HatCorners& out) {
  out.count = 0;
  int cell[4];
  double u[4];
  for (int ax = 0; ax < g.n; ++ax) {
    const double t = (x[ax] - g.origin[static_cast<size_t>(ax)]) / g.spacing;
    if (t < 0.0 || t > double(g.dims[static_cast<size_t>(ax)] - 1)) return;
    int c = int(t);
    if (c > g.dims[static_cast<size_t>(ax)] - 2) c = g.dims[static_cast<size_t>(ax)] - 2;
    cell[ax] = c;
    u[ax] = t - c;
  }
  const int corners = 1 << g.n;
  for (int mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::array<int, 4> idx{0, 0, 0, 0};
    for (int ax = 0; ax < g.n; ++ax) {
      const int bit = (mask >> ax) & 1;
      w *= bit ? u[ax] : 1.0 - u[ax];
      idx[static_cast<size_t>(ax)] = cell[ax] + bit;
    }
    out.index[static_cast<size_t>(out.count)] = g.node_index(idx);
    out.weight[static_cast<size_t>(out.count)] = w;
    ++out.count;
  }
}

// Chord integrals of the scalar hats touched by one ray, Simpson weights and
// node layout identical to solve_weighted_linear. Output sorted by node id.
inline void ray_hat_integrals(const HyperGrid& g, const Ray& ray, double step,
                              std::vector<std::pair<std::uint32_t, double>>& out) {
  out.clear();
  const double len = ray.length();
  if (len < kGrazingChordLength) return;
  int nint = std::max(2, int(std::ceil(len / step)));
  if (nint % 2) ++nint;
  const double h = len / nint;

  static thread_local std::vector<double> acc;
  static thread_local std::vector<std::uint8_t> seen;
  const std::size_t nodes = g.node_count();
  if (acc.size() < nodes) {
    acc.assign(nodes, 0.0);
    seen.assign(nodes, 0);
  }
  std::vector<std::uint32_t> touched;
  HatCorners hc;
  for (int k = 0; k <= nint; ++k) {
    const double t = ray.tau_minus + k * h;
    hat_corners(g, ray.point(t), hc);
    if (hc.count == 0) continue;
    const double sw = ((k == 0 || k == nint) ? 1.0 : (k % 2 ? 4.0 : 2.0)) * h / 3.0;
    for (int c = 0; c < hc.count; ++c) {
      const std::size_t id = hc.index[static_cast<size_t>(c)];
      if (!seen[id]) {
        seen[id] = 1;
        acc[id] = 0.0;
        touched.push_back(std::uint32_t(id));
      }
      acc[id] += sw * hc.weight[static_cast<size_t>(c)];
    }
  }
  std::sort(touched.begin(), touched.end());
  out.reserve(touched.size());
  for (std::uint32_t id : touched) {
    out.emplace_back(id, acc[id]);
    seen[id] = 0;
  }
}

}  // namespace detail

struct AssembleOptions {
  UnknownClass cls = UnknownClass::RealSymmetric;
  double step = 0.0;                    // chord step length; 0 = chord/1024
  double memory_limit_bytes = 3.0e9;    // conservative pre-allocation guard
  int threads = 1;
};

// Linear map from stacked voxel coefficients to stacked data entries
// (per ray: re/im of each matrix entry, row-major). Unit weights use the
// factored per-ray representation; general weights store explicit rows.
class ForwardOperator {
 public:
  HyperGrid grid;
  UnknownClass cls = UnknownClass::RealSymmetric;
  int comps = 6;      // per-node coefficients
  int entry_rows = 18;  // 2 n^2 data rows per ray
  bool factored = true;

  // factored storage
  std::vector<std::size_t> ray_offset;            // rays+1 into nodes/hat
  std::vector<std::uint32_t> nodes;
  std::vector<double> hat;
  std::vector<double> proj;                       // per ray: entry_rows x comps

  // explicit storage (general weights): CSR over all rows
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> cols_idx;
  std::vector<double> vals;

  std::size_t ray_count() const { return ray_offset.empty() ? 0 : ray_offset.size() - 1; }
  std::size_t rows() const {
    return factored ? ray_count() * static_cast<size_t>(entry_rows)
                    : (row_ptr.empty() ? 0 : row_ptr.size() - 1);
  }
  std::size_t cols() const { return grid.node_count() * static_cast<size_t>(comps); }

  std::size_t row_ray(std::size_t row) const { return row / static_cast<size_t>(entry_rows); }
  int row_entry(std::size_t row) const { return int(row % static_cast<size_t>(entry_rows)) / 2; }
  bool row_is_imag(std::size_t row) const { return row % 2 == 1; }
  std::size_t col_voxel(std::size_t col) const { return col / static_cast<size_t>(comps); }
  int col_component(std::size_t col) const { return int(col % static_cast<size_t>(comps)); }

  std::size_t memory_bytes() const {
    return nodes.size() * 4 + (hat.size() + proj.size() + vals.size()) * 8 +
           (ray_offset.size() + row_ptr.size()) * 8 + cols_idx.size() * 4;
  }

  void apply(const std::vector<double>& c, std::vector<double>& out) const {
    if (c.size() != cols()) throw std::invalid_argument("apply: coefficient size mismatch");
    out.assign(rows(), 0.0);
    if (factored) {
      std::vector<double> z(static_cast<size_t>(comps));
      for (std::size_t r = 0; r < ray_count(); ++r) {
        std::fill(z.begin(), z.end(), 0.0);
        for (std::size_t v = ray_offset[r]; v < ray_offset[r + 1]; ++v) {
          const double w = hat[v];
          const double* cv = c.data() + static_cast<size_t>(nodes[v]) * static_cast<size_t>(comps);
          for (int k = 0; k < comps; ++k) z[static_cast<size_t>(k)] += w * cv[k];
        }
        const double* m = proj.data() + r * static_cast<size_t>(entry_rows) * static_cast<size_t>(comps);
        double* o = out.data() + r * static_cast<size_t>(entry_rows);
        for (int e = 0; e < entry_rows; ++e) {
          double s = 0.0;
          for (int k = 0; k < comps; ++k) s += m[e * comps + k] * z[static_cast<size_t>(k)];
          o[e] = s;
        }
      }
    } else {
      for (std::size_t row = 0; row + 1 < row_ptr.size(); ++row) {
        double s = 0.0;
        for (std::size_t p = row_ptr[row]; p < row_ptr[row + 1]; ++p)
          s += vals[p] * c[cols_idx[p]];
        out[row] = s;
      }
    }
  }

  void apply_adjoint(const std::vector<double>& d, std::vector<double>& out) const {
    if (d.size() != rows()) throw std::invalid_argument("apply_adjoint: data size mismatch");
    out.assign(cols(), 0.0);
    if (factored) {
      std::vector<double> y(static_cast<size_t>(comps));
      for (std::size_t r = 0; r < ray_count(); ++r) {
        const double* m = proj.data() + r * static_cast<size_t>(entry_rows) * static_cast<size_t>(comps);
        const double* dr = d.data() + r * static_cast<size_t>(entry_rows);
        for (int k = 0; k < comps; ++k) {
          double s = 0.0;
          for (int e = 0; e < entry_rows; ++e) s += m[e * comps + k] * dr[e];
          y[static_cast<size_t>(k)] = s;
        }
        for (std::size_t v = ray_offset[r]; v < ray_offset[r + 1]; ++v) {
          const double w = hat[v];
          double* ov = out.data() + static_cast<size_t>(nodes[v]) * static_cast<size_t>(comps);
          for (int k = 0; k < comps; ++k) ov[k] += w * y[static_cast<size_t>(k)];
        }
      }
    } else {
      for (std::size_t row = 0; row + 1 < row_ptr.size(); ++row)
        for (std::size_t p = row_ptr[row]; p < row_ptr[row + 1]; ++p)
          out[cols_idx[p]] += vals[p] * d[row];
    }
  }

  // Squared column norms; exact zeros mark voxels no ray touches.
  std::vector<double> column_norms_sq() const {
    std::vector<double> cn(cols(), 0.0);
    if (factored) {
      for (std::size_t r = 0; r < ray_count(); ++r) {
        const double* m = proj.data() + r * static_cast<size_t>(entry_rows) * static_cast<size_t>(comps);
        std::vector<double> msq(static_cast<size_t>(comps), 0.0);
        for (int k = 0; k < comps; ++k)
          for (int e = 0; e < entry_rows; ++e)
            msq[static_cast<size_t>(k)] += m[e * comps + k] * m[e * comps + k];
        for (std::size_t v = ray_offset[r]; v < ray_offset[r + 1]; ++v)
          for (int k = 0; k < comps; ++k)
            cn[static_cast<size_t>(nodes[v]) * static_cast<size_t>(comps) + static_cast<size_t>(k)] +=
                hat[v] * hat[v] * msq[static_cast<size_t>(k)];
      }
    } else {
      for (std::size_t p = 0; p < vals.size(); ++p) cn[cols_idx[p]] += vals[p] * vals[p];
    }
    return cn;
  }
};

inline ForwardOperator assemble(const HyperGrid& grid, const std::vector<Ray>& rays,
                                const WeightField& p, const WeightField& q,
                                const AssembleOptions& opt = {}) {
  const int n = grid.n;
  if (!rays.empty() && rays.front().xi.dim() != n)
    throw std::invalid_argument("assemble: ray dimension mismatch");
  if (grid.node_count() >= (std::size_t(1) << 32))
    throw std::invalid_argument("assemble: grid too large for 32-bit node ids");
  const bool unit = p.is_unit() && q.is_unit();
  const int comps = components_per_node(opt.cls, n);
  const int entry_rows = 2 * n * n;

  // worst-case hats per ray: every crossed cell contributes its corners
  std::size_t dim_sum = 0;
  for (int ax = 0; ax < n; ++ax) dim_sum += static_cast<size_t>(grid.dims[static_cast<size_t>(ax)]);
  const std::size_t hat_bound = (std::size_t(1) << n) * (dim_sum + n);
  const std::size_t est =
      unit ? rays.size() * (hat_bound * 12 + static_cast<size_t>(entry_rows) * static_cast<size_t>(comps) * 8)
           : rays.size() * static_cast<size_t>(entry_rows) *
                 (hat_bound * static_cast<size_t>(comps) * 12 + 16);
  if (est > opt.memory_limit_bytes) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "assemble: estimated %.2f GB exceeds the %.2f GB limit (%zu rays, %s storage)",
                  est / 1e9, opt.memory_limit_bytes / 1e9, rays.size(),
                  unit ? "factored" : "explicit");
    throw std::runtime_error(buf);
  }

  ForwardOperator op;
  op.grid = grid;
  op.cls = opt.cls;
  op.comps = comps;
  op.entry_rows = entry_rows;
  op.factored = unit;

  // per-ray hat lists (parallel, disjoint slots)
  std::vector<std::vector<std::pair<std::uint32_t, double>>> hats(rays.size());
  parallel_for(rays.size(), opt.threads, [&](std::size_t r) {
    const double step = opt.step > 0.0 ? opt.step : rays[r].length() / 1024.0;
    detail::ray_hat_integrals(grid, rays[r], step > 0.0 ? step : 1.0, hats[r]);
  });

  if (unit) {
    op.ray_offset.assign(rays.size() + 1, 0);
    for (std::size_t r = 0; r < rays.size(); ++r)
      op.ray_offset[r + 1] = op.ray_offset[r] + hats[r].size();
    op.nodes.resize(op.ray_offset.back());
    op.hat.resize(op.ray_offset.back());
    op.proj.assign(rays.size() * static_cast<size_t>(entry_rows) * static_cast<size_t>(comps), 0.0);
    parallel_for(rays.size(), opt.threads, [&](std::size_t r) {
      std::size_t at = op.ray_offset[r];
      for (const auto& nv : hats[r]) {
        op.nodes[at] = nv.first;
        op.hat[at] = nv.second;
        ++at;
      }
      double* m = op.proj.data() + r * static_cast<size_t>(entry_rows) * static_cast<size_t>(comps);
      for (int k = 0; k < comps; ++k) {
        const CMat pb = project_transverse(unknown_basis_matrix(opt.cls, n, k), rays[r].xi);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const int e = i * n + j;
            m[(2 * e) * comps + k] = pb(i, j).real();
            m[(2 * e + 1) * comps + k] = pb(i, j).imag();
          }
      }
    });
    return op;
  }

  // explicit rows: re-walk each chord accumulating p (P_xi B_k) q per node
  op.ray_offset.assign(rays.size() + 1, 0);
  for (std::size_t r = 0; r < rays.size(); ++r)
    op.ray_offset[r + 1] = op.ray_offset[r] + hats[r].size();
  op.row_ptr.assign(rays.size() * static_cast<size_t>(entry_rows) + 1, 0);
  std::vector<std::vector<double>> blocks(rays.size());  // per ray: nodes x comps x entry_rows
  parallel_for(rays.size(), opt.threads, [&](std::size_t r) {
    const Ray& ray = rays[r];
    const std::size_t local = hats[r].size();
    std::vector<double>& blk = blocks[r];
    blk.assign(local * static_cast<size_t>(comps) * static_cast<size_t>(entry_rows), 0.0);
    if (local == 0) return;
    const double len = ray.length();
    if (len < kGrazingChordLength) return;
    const double step0 = opt.step > 0.0 ? opt.step : len / 1024.0;
    int nint = std::max(2, int(std::ceil(len / step0)));
    if (nint % 2) ++nint;
    const double h = len / nint;
    // local index of each node id
    std::vector<std::uint32_t> ids(local);
    for (std::size_t v = 0; v < local; ++v) ids[v] = hats[r][v].first;
    std::vector<CMat> pbq(static_cast<size_t>(comps), CMat(n));
    detail::HatCorners hc;
    for (int k = 0; k <= nint; ++k) {
      const double t = ray.tau_minus + k * h;
      const Vec x = ray.point(t);
      detail::hat_corners(op.grid, x, hc);
      if (hc.count == 0) continue;
      const double sw = ((k == 0 || k == nint) ? 1.0 : (k % 2 ? 4.0 : 2.0)) * h / 3.0;
      const CMat pm = p.eval(x, ray.xi);
      const CMat qm = q.eval(x, ray.xi);
      for (int kc = 0; kc < comps; ++kc) {
        CMat b = project_transverse(unknown_basis_matrix(op.cls, n, kc), ray.xi);
        if (!p.is_unit()) b = pm * b;
        if (!q.is_unit()) b = b * qm;
        pbq[static_cast<size_t>(kc)] = b;
      }
      for (int c = 0; c < hc.count; ++c) {
        const std::uint32_t id = std::uint32_t(hc.index[static_cast<size_t>(c)]);
        const std::size_t v =
            static_cast<size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
        const double w = sw * hc.weight[static_cast<size_t>(c)];
        for (int kc = 0; kc < comps; ++kc) {
          const CMat& b = pbq[static_cast<size_t>(kc)];
          double* slot = blk.data() + (v * static_cast<size_t>(comps) + static_cast<size_t>(kc)) *
                                          static_cast<size_t>(entry_rows);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              const int e = i * n + j;
              slot[2 * e] += w * b(i, j).real();
              slot[2 * e + 1] += w * b(i, j).imag();
            }
        }
      }
    }
  });
  // flatten to CSR (row-major: ray, entry row; columns sorted by node)
  std::size_t nnz = 0;
  for (std::size_t r = 0; r < rays.size(); ++r)
    nnz += hats[r].size() * static_cast<size_t>(comps) * static_cast<size_t>(entry_rows);
  op.cols_idx.reserve(nnz);
  op.vals.reserve(nnz);
  std::size_t row = 0;
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const std::size_t local = hats[r].size();
    for (int e = 0; e < entry_rows; ++e, ++row) {
      for (std::size_t v = 0; v < local; ++v)
        for (int kc = 0; kc < comps; ++kc) {
          const double val =
              blocks[r][(v * static_cast<size_t>(comps) + static_cast<size_t>(kc)) *
                            static_cast<size_t>(entry_rows) +
                        static_cast<size_t>(e)];
          if (val == 0.0) continue;
          op.cols_idx.push_back(hats[r][v].first * std::uint32_t(comps) + std::uint32_t(kc));
          op.vals.push_back(val);
        }
      op.row_ptr[row + 1] = op.vals.size();
    }
    blocks[r].clear();
    blocks[r].shrink_to_fit();
  }
  return op;
}

inline ForwardOperator assemble(const GridSpec& spec, const std::vector<Ray>& rays,
                                const WeightField& p, const WeightField& q,
                                const AssembleOptions& opt = {}) {
  return assemble(HyperGrid::from_grid_spec(spec), rays, p, q, opt);
}

// Stacked data vector matching the operator's row layout.
inline std::vector<double> stack_data(const BoundaryDataSet& data) {
  const int n = data.value_dim;
  std::vector<double> d;
  d.reserve(data.records.size() * static_cast<size_t>(2 * n * n));
  for (const BoundaryRecord& rec : data.records) {
    if (!rec.ok) throw std::invalid_argument("stack_data: failed record present");
    if (rec.value.size() != static_cast<size_t>(n) * static_cast<size_t>(n))
      throw std::invalid_argument("stack_data: value size mismatch");
    for (const cplx& v : rec.value) {
      d.push_back(v.real());
      d.push_back(v.imag());
    }
  }
  return d;
}

struct ReconstructionResult {
  std::vector<double> coefficients;
  double lambda_reg = 0.0;
  double data_misfit = 0.0;    // final |A c - d|
  double solution_norm = 0.0;  // |c|
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;  // |A c - d|^2 + lambda |c|^2, per iteration
  std::vector<double> misfit_history;     // |A c - d|, per iteration
};

// CGLS on the stacked system [A; sqrt(lambda) I]. The recorded objective is
// the regularized least-squares functional, which CG decreases monotonically.
inline ReconstructionResult tikhonov_solve(const ForwardOperator& A, const std::vector<double>& d,
                                           double lambda_reg, double tolerance = 1e-8,
                                           int max_iterations = 2000) {
  if (lambda_reg <= 0.0) throw std::invalid_argument("tikhonov_solve needs lambda_reg > 0");
  if (d.size() != A.rows()) throw std::invalid_argument("tikhonov_solve: data size mismatch");
  const std::size_t nc = A.cols();
  ReconstructionResult res;
  res.lambda_reg = lambda_reg;
  std::vector<double> c(nc, 0.0), r(d), s(nc), pvec(nc), q;
  A.apply_adjoint(r, s);  // s = A^T d - lambda c with c = 0
  pvec = s;
  double gamma = 0.0;
  for (double v : s) gamma += v * v;
  const double gamma0 = gamma;
  auto norm2 = [](const std::vector<double>& v) {
    double t = 0.0;
    for (double x : v) t += x * x;
    return t;
  };
  double rn2 = norm2(r), cn2 = 0.0;
  res.objective_history.push_back(rn2);
  res.misfit_history.push_back(std::sqrt(rn2));
  std::vector<double> aq(nc);
  while (res.iterations < max_iterations && gamma > tolerance * tolerance * gamma0) {
    A.apply(pvec, q);
    double delta = norm2(q) + lambda_reg * norm2(pvec);
    if (delta <= 0.0) break;
    const double alpha = gamma / delta;
    for (std::size_t i = 0; i < nc; ++i) c[i] += alpha * pvec[i];
    for (std::size_t i = 0; i < d.size(); ++i) r[i] -= alpha * q[i];
    A.apply_adjoint(r, aq);
    for (std::size_t i = 0; i < nc; ++i) aq[i] -= lambda_reg * c[i];
    double gamma_new = norm2(aq);
    const double beta = gamma_new / gamma;
    gamma = gamma_new;
    for (std::size_t i = 0; i < nc; ++i) pvec[i] = aq[i] + beta * pvec[i];
    ++res.iterations;
    rn2 = norm2(r);
    cn2 = norm2(c);
    res.objective_history.push_back(rn2 + lambda_reg * cn2);
    res.misfit_history.push_back(std::sqrt(rn2));
  }
  res.converged = gamma <= tolerance * tolerance * gamma0;
  res.coefficients = std::move(c);
  res.data_misfit = std::sqrt(rn2);
  res.solution_norm = std::sqrt(cn2);
  return res;
}

struct ReconstructConfig {
  GridSpec grid;
  UnknownClass cls = UnknownClass::RealSymmetric;
  double lambda_reg = 1e-4;
  double step = 0.0;  // assembly chord step; 0 = chord/1024
  double tolerance = 1e-8;
  int max_iterations = 2000;
  double memory_limit_bytes = 3.0e9;
  int threads = 1;
};

struct NonlinearReconstruction {
  ReconstructionResult solve;
  GridField estimate;
  std::size_t rays_used = 0;
  std::size_t rays_dropped = 0;
};

// One linearization step from two transport data sets on identical rays:
// d = Phi1^{-1} Phi2 - E, inverted with the unit-weight operator (the true
// weights depend on the unknown fields and are dropped at this order).
inline NonlinearReconstruction reconstruct_nonlinear(const BoundaryDataSet& phi1,
                                                     const BoundaryDataSet& phi2,
                                                     const ReconstructConfig& cfg) {
  const BoundaryDataSet lin = linearized_data(phi1, phi2);
  std::vector<Ray> rays;
  BoundaryDataSet good;
  good.value_dim = lin.value_dim;
  good.space_dim = lin.space_dim;
  std::size_t dropped = 0;
  for (const BoundaryRecord& rec : lin.records) {
    if (rec.ok) {
      rays.push_back(rec.ray);
      good.records.push_back(rec);
    } else {
      ++dropped;
    }
  }
  AssembleOptions aopt;
  aopt.cls = cfg.cls;
  aopt.step = cfg.step;
  aopt.memory_limit_bytes = cfg.memory_limit_bytes;
  aopt.threads = cfg.threads;
  ForwardOperator A = assemble(cfg.grid, rays, WeightField::unit(3), WeightField::unit(3), aopt);
  const std::vector<double> d = stack_data(good);
  ReconstructionResult sol =
      tikhonov_solve(A, d, cfg.lambda_reg, cfg.tolerance, cfg.max_iterations);
  GridField est = field_from_coefficients(A.grid, cfg.cls, sol.coefficients);
  return NonlinearReconstruction{std::move(sol), std::move(est), rays.size(), dropped};
}

struct ClosedPartError {
  double relative_error = 0.0;  // |closed(truth) - closed(estimate)| / |closed(truth)|
  double truth_norm = 0.0;
  double estimate_norm = 0.0;
};

// Gauge-aware comparison: both fields are decomposed and only the parts with
// closed skew form are compared, node-wise over the ball interior.
inline ClosedPartError closed_part_relative_error(const MatrixField& truth,
                                                  const MatrixField& estimate,
                                                  const GridSpec& spec, const BallDomain& ball,
                                                  const DecomposeOptions& dopt = {}) {
  const DecomposeResult dt = decompose(truth, spec, ball, dopt);
  const DecomposeResult de = decompose(estimate, spec, ball, dopt);
  double num = 0.0, den = 0.0, est = 0.0;
  for (int ix = 0; ix < spec.dims[0]; ++ix)
    for (int iy = 0; iy < spec.dims[1]; ++iy)
      for (int iz = 0; iz < spec.dims[2]; ++iz) {
        const Vec x = spec.node_point(ix, iy, iz);
        if (norm(x - ball.center) >= ball.radius) continue;
        const CMat a = dt.tilde.node_value(ix, iy, iz);
        const CMat b = de.tilde.node_value(ix, iy, iz);
        CMat diff = a;
        diff -= b;
        num += diff.frob_norm_sq();
        den += a.frob_norm_sq();
        est += b.frob_norm_sq();
      }
  ClosedPartError e;
  e.truth_norm = std::sqrt(den);
  e.estimate_norm = std::sqrt(est);
  e.relative_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return e;
}

// -------- sparse triplet spill format --------
// Layout (little-endian): magic "PTSP", i64 rows, i64 cols, i64 nnz, then
// nnz i64 row indices, nnz i64 column indices, nnz f64 values.

struct SparseTriplets {
  std::int64_t rows = 0, cols = 0;
  std::vector<std::int64_t> row_idx, col_idx;
  std::vector<double> values;
};

inline SparseTriplets to_triplets(const ForwardOperator& A, std::size_t max_nnz = 50'000'000) {
  SparseTriplets t;
  t.rows = std::int64_t(A.rows());
  t.cols = std::int64_t(A.cols());
  if (A.factored) {
    std::size_t nnz_bound = 0;
    for (std::size_t r = 0; r < A.ray_count(); ++r)
      nnz_bound += (A.ray_offset[r + 1] - A.ray_offset[r]) * static_cast<size_t>(A.comps) *
                   static_cast<size_t>(A.entry_rows);
    if (nnz_bound > max_nnz)
      throw std::runtime_error("to_triplets: explicit form exceeds the requested nnz bound");
    for (std::size_t r = 0; r < A.ray_count(); ++r) {
      const double* m =
          A.proj.data() + r * static_cast<size_t>(A.entry_rows) * static_cast<size_t>(A.comps);
      for (int e = 0; e < A.entry_rows; ++e) {
        const std::int64_t row = std::int64_t(r) * A.entry_rows + e;
        for (std::size_t v = A.ray_offset[r]; v < A.ray_offset[r + 1]; ++v)
          for (int k = 0; k < A.comps; ++k) {
            const double val = A.hat[v] * m[e * A.comps + k];
            if (val == 0.0) continue;
            t.row_idx.push_back(row);
            t.col_idx.push_back(std::int64_t(A.nodes[v]) * A.comps + k);
            t.values.push_back(val);
          }
      }
    }
  } else {
    if (A.vals.size() > max_nnz)
      throw std::runtime_error("to_triplets: explicit form exceeds the requested nnz bound");
    for (std::size_t row = 0; row + 1 < A.row_ptr.size(); ++row)
      for (std::size_t p = A.row_ptr[row]; p < A.row_ptr[row + 1]; ++p) {
        t.row_idx.push_back(std::int64_t(row));
        t.col_idx.push_back(std::int64_t(A.cols_idx[p]));
        t.values.push_back(A.vals[p]);
      }
  }
  return t;
}

namespace detail {

template <class T>
void write_pod(std::ofstream& f, const T* p, std::size_t count) {
  f.write(reinterpret_cast<const char*>(p), std::streamsize(count * sizeof(T)));
}

template <class T>
void read_pod(std::ifstream& f, T* p, std::size_t count) {
  f.read(reinterpret_cast<char*>(p), std::streamsize(count * sizeof(T)));
}

}  // namespace detail

inline void write_sparse_triplets(const std::string& path, const SparseTriplets& t) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write("PTSP", 4);
  const std::int64_t nnz = std::int64_t(t.values.size());
  detail::write_pod(f, &t.rows, 1);
  detail::write_pod(f, &t.cols, 1);
  detail::write_pod(f, &nnz, 1);
  detail::write_pod(f, t.row_idx.data(), t.row_idx.size());
  detail::write_pod(f, t.col_idx.data(), t.col_idx.size());
  detail::write_pod(f, t.values.data(), t.values.size());
  if (!f) throw std::runtime_error("short write: " + path);
}

inline SparseTriplets read_sparse_triplets(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "PTSP", 4) != 0)
    throw std::runtime_error("not a sparse triplet file: " + path);
  SparseTriplets t;
  std::int64_t nnz = 0;
  detail::read_pod(f, &t.rows, 1);
  detail::read_pod(f, &t.cols, 1);
  detail::read_pod(f, &nnz, 1);
  if (!f || nnz < 0) throw std::runtime_error("corrupt triplet header: " + path);
  t.row_idx.resize(static_cast<size_t>(nnz));
  t.col_idx.resize(static_cast<size_t>(nnz));
  t.values.resize(static_cast<size_t>(nnz));
  detail::read_pod(f, t.row_idx.data(), t.row_idx.size());
  detail::read_pod(f, t.col_idx.data(), t.col_idx.size());
  detail::read_pod(f, t.values.data(), t.values.size());
  if (!f) throw std::runtime_error("short read: " + path);
  return t;
}

// -------- spectrum probes --------

// |A c|^2 / |c|^2 for one direction.
inline double action_quotient(const ForwardOperator& A, const std::vector<double>& c) {
  std::vector<double> out;
  A.apply(c, out);
  double num = 0.0, den = 0.0;
  for (double v : out) num += v * v;
  for (double v : c) den += v * v;
  if (den == 0.0) throw std::invalid_argument("action_quotient: zero vector");
  return num / den;
}

struct SpectrumProbe {
  double min_quotient = 0.0;  // smallest Ritz value of A^T A on active columns
  double max_quotient = 0.0;
  std::size_t active_columns = 0;
  int iterations = 0;
};

// Lanczos with full reorthogonalization on A^T A restricted to columns some
// ray actually touches (untouched voxels are exact null directions of no
// interest). Eigenvalues of the tridiagonal matrix come from the dense
// Jacobi solver; extreme Ritz values estimate the spectrum edges.
inline SpectrumProbe spectrum_probe(const ForwardOperator& A, int iterations, std::uint64_t seed);

namespace detail {

inline void jacobi_eigenvalues_only(std::vector<double>& a, int n, std::vector<double>& eval) {
  auto at = [&](int i, int j) -> double& {
    return a[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)];
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-28) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  eval.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) eval[static_cast<size_t>(i)] = at(i, i);
  std::sort(eval.begin(), eval.end());
}

}  // namespace detail

inline SpectrumProbe spectrum_probe(const ForwardOperator& A, int iterations, std::uint64_t seed) {
  const std::vector<double> cn = A.column_norms_sq();
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < cn.size(); ++i)
    if (cn[i] > 0.0) active.push_back(i);
  SpectrumProbe probe;
  probe.active_columns = active.size();
  if (active.empty()) return probe;
  const std::size_t m = active.size();
  const int iters = std::min<int>(iterations, int(m));
  Rng rng(seed);

  std::vector<double> full(A.cols(), 0.0), fout;
  auto op_apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::fill(full.begin(), full.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) full[active[i]] = x[i];
    std::vector<double> mid;
    A.apply(full, mid);
    A.apply_adjoint(mid, fout);
    y.resize(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = fout[active[i]];
  };

  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::vector<double> v(m), w(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = rng.normal();
  double nv = 0.0;
  for (double x : v) nv += x * x;
  nv = std::sqrt(nv);
  for (double& x : v) x /= nv;
  basis.push_back(v);
  for (int j = 0; j < iters; ++j) {
    op_apply(basis.back(), w);
    double a = 0.0;
    for (std::size_t i = 0; i < m; ++i) a += w[i] * basis.back()[i];
    alpha.push_back(a);
    for (std::size_t i = 0; i < m; ++i) w[i] -= a * basis.back()[i];
    if (basis.size() > 1) {
      const std::vector<double>& prev = basis[basis.size() - 2];
      const double b = beta.back();
      for (std::size_t i = 0; i < m; ++i) w[i] -= b * prev[i];
    }
    // full reorthogonalization, two passes
    for (int pass = 0; pass < 2; ++pass)
      for (const std::vector<double>& u : basis) {
        double d = 0.0;
        for (std::size_t i = 0; i < m; ++i) d += w[i] * u[i];
        for (std::size_t i = 0; i < m; ++i) w[i] -= d * u[i];
      }
    double nb = 0.0;
    for (double x : w) nb += x * x;
    nb = std::sqrt(nb);
    if (nb < 1e-14 || j == iters - 1) {
      probe.iterations = j + 1;
      break;
    }
    beta.push_back(nb);
    for (double& x : w) x /= nb;
    basis.push_back(w);
    probe.iterations = j + 1;
  }
  const int k = int(alpha.size());
  if (k == 0) return probe;
  std::vector<double> tri(static_cast<size_t>(k) * static_cast<size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    tri[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(i)] = alpha[static_cast<size_t>(i)];
    if (i + 1 < k && static_cast<size_t>(i) < beta.size()) {
      tri[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(i + 1)] = beta[static_cast<size_t>(i)];
      tri[static_cast<size_t>(i + 1) * static_cast<size_t>(k) + static_cast<size_t>(i)] = beta[static_cast<size_t>(i)];
    }
  }
  std::vector<double> eval;
  detail::jacobi_eigenvalues_only(tri, k, eval);
  probe.min_quotient = eval.front();
  probe.max_quotient = eval.back();
  return probe;
}

}  // namespace ptomo
