#pragma once

// Gauge decomposition on a node grid over the ball: f = L_{grad lambda} + ftilde
// with lambda solving the Dirichlet problem
//   Laplace(lambda) = -(d f-_23/dx1 + d f-_31/dx2 + d f-_12/dx3),  lambda|boundary = 0,
// where f- is the skew-symmetric part of f. Discretely, the closedness source
// is taken with central differences and the Poisson operator is the exact
// composition of that divergence with the central-difference gradient (a
// 7-point stencil with +-2h legs). Using the exact composition makes the
// split idempotent: re-decomposing ftilde returns lambda = 0 up to the linear
// solver tolerance, independent of grid resolution.

#include <cstdint>
#include <cstdio>
#include <vector>

#include "ptomo/fields.hpp"
#include "ptomo/geometry.hpp"
#include "ptomo/linalg.hpp"
#include "ptomo/tensor_ops.hpp"

namespace ptomo {

// Scalar values on a node grid with a Dirichlet mask; masked nodes hold 0.
struct ScalarGridField {
  GridSpec spec;
  std::vector<cplx> values;          // node-ordered, masked entries zero
  std::vector<std::uint8_t> inside;  // 1 = interior unknown, 0 = masked

  double max_abs() const {
    double m = 0.0;
    for (const cplx& v : values) m = std::max(m, std::abs(v));
    return m;
  }

  // Trilinear evaluation (masked nodes contribute zero).
  cplx eval(const Vec& x) const {
    double u[3];
    int c[3];
    for (int ax = 0; ax < 3; ++ax) {
      const double t = (x[ax] - spec.origin[ax]) / spec.spacing;
      if (t < 0.0 || t > double(spec.dims[static_cast<size_t>(ax)] - 1)) return cplx(0.0);
      int cell = int(t);
      if (cell > spec.dims[static_cast<size_t>(ax)] - 2)
        cell = spec.dims[static_cast<size_t>(ax)] - 2;
      c[ax] = cell;
      u[ax] = t - cell;
    }
    cplx s = 0.0;
    for (int dx = 0; dx < 2; ++dx)
      for (int dy = 0; dy < 2; ++dy)
        for (int dz = 0; dz < 2; ++dz) {
          const double w = (dx ? u[0] : 1.0 - u[0]) * (dy ? u[1] : 1.0 - u[1]) *
                           (dz ? u[2] : 1.0 - u[2]);
          s += w * values[spec.node_index(c[0] + dx, c[1] + dy, c[2] + dz)];
        }
    return s;
  }
};

// L_{grad lambda} as a field; skew-symmetric (hence skew-Hermitian for the
// real lambda used here).
inline CallableField potential_field(const ScalarField& lambda) {
  if (!lambda.gradient) throw std::invalid_argument("potential_field needs a gradient");
  auto grad = lambda.gradient;
  return CallableField(3, SymmetryClass::SkewHermitian,
                       [grad](const Vec& x) { return cross_operator(grad(x)); });
}

// Closedness source c(f) = d1 f-_23 + d2 f-_31 + d3 f-_12 from exact
// derivatives; vanishes iff the skew part of f is a closed 2-form
// (c = -Laplace(lambda) when f = L_{grad lambda}).
inline cplx closedness_residual(const MatrixField& f, const Vec& x) {
  if (!f.has_derivatives())
    throw std::invalid_argument("closedness_residual needs first derivatives");
  auto skew_entry = [&](const CMat& m, int i, int j) { return 0.5 * (m(i, j) - m(j, i)); };
  const CMat d1 = f.d1(x, 0), d2 = f.d1(x, 1), d3 = f.d1(x, 2);
  return skew_entry(d1, 1, 2) + skew_entry(d2, 2, 0) + skew_entry(d3, 0, 1);
}

namespace detail {

// Central difference of a node array along one axis; out-of-array reads 0.
inline cplx central_diff(const std::vector<cplx>& a, const GridSpec& spec, int ix, int iy, int iz,
                         int axis) {
  int p[3] = {ix, iy, iz}, m[3] = {ix, iy, iz};
  ++p[axis];
  --m[axis];
  cplx vp = 0.0, vm = 0.0;
  if (p[axis] <= spec.dims[static_cast<size_t>(axis)] - 1)
    vp = a[spec.node_index(p[0], p[1], p[2])];
  if (m[axis] >= 0) vm = a[spec.node_index(m[0], m[1], m[2])];
  return (vp - vm) / (2.0 * spec.spacing);
}

}  // namespace detail

// Grid-side closedness source at every node, central differences.
inline std::vector<cplx> closedness_residual(const GridField& g) {
  const GridSpec& spec = g.spec();
  const std::size_t nodes = spec.node_count();
  // skew components s23, s31, s12 per node
  std::vector<cplx> s23(nodes), s31(nodes), s12(nodes);
  for (int ix = 0; ix < spec.dims[0]; ++ix)
    for (int iy = 0; iy < spec.dims[1]; ++iy)
      for (int iz = 0; iz < spec.dims[2]; ++iz) {
        const CMat m = g.node_value(ix, iy, iz);
        const std::size_t id = spec.node_index(ix, iy, iz);
        s23[id] = 0.5 * (m(1, 2) - m(2, 1));
        s31[id] = 0.5 * (m(2, 0) - m(0, 2));
        s12[id] = 0.5 * (m(0, 1) - m(1, 0));
      }
  std::vector<cplx> c(nodes, cplx(0.0));
  for (int ix = 0; ix < spec.dims[0]; ++ix)
    for (int iy = 0; iy < spec.dims[1]; ++iy)
      for (int iz = 0; iz < spec.dims[2]; ++iz)
        c[spec.node_index(ix, iy, iz)] = detail::central_diff(s23, spec, ix, iy, iz, 0) +
                                         detail::central_diff(s31, spec, ix, iy, iz, 1) +
                                         detail::central_diff(s12, spec, ix, iy, iz, 2);
  return c;
}

struct DecomposeResult {
  ScalarGridField lambda;
  std::vector<cplx> grad_lambda;  // 3 per node (node-major), central differences
  GridField tilde;                // f - L_{grad lambda} on the same grid
  int cg_iterations = 0;
  double cg_relative_residual = 0.0;
  bool converged = false;
};

struct DecomposeOptions {
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 20000;
};

inline DecomposeResult decompose(const MatrixField& f, const GridSpec& spec,
                                 const BallDomain& ball, const DecomposeOptions& opt = {}) {
  if (f.dim() != 3 || ball.dim() != 3) throw std::invalid_argument("decompose requires n = 3");
  const GridField sampled = GridField::sample(f, spec);
  const std::size_t nodes = spec.node_count();

  // Dirichlet mask: strictly interior ball nodes are unknowns.
  std::vector<std::uint8_t> inside(nodes, 0);
  std::vector<std::size_t> unknowns;
  for (int ix = 0; ix < spec.dims[0]; ++ix)
    for (int iy = 0; iy < spec.dims[1]; ++iy)
      for (int iz = 0; iz < spec.dims[2]; ++iz) {
        const Vec x = spec.node_point(ix, iy, iz);
        if (norm(x - ball.center) < ball.radius) {
          inside[spec.node_index(ix, iy, iz)] = 1;
          unknowns.push_back(spec.node_index(ix, iy, iz));
        }
      }

  const std::vector<cplx> source = closedness_residual(sampled);

  // Solve -Lap_wide(lambda) = source on unknowns; the operator is the exact
  // composition of the central divergence and central gradient, i.e. the
  // 7-point stencil with legs at +-2h. SPD, solved with plain CG.
  const double inv4h2 = 1.0 / (4.0 * spec.spacing * spec.spacing);
  auto node_coords = [&](std::size_t id, int& ix, int& iy, int& iz) {
    iz = int(id % static_cast<size_t>(spec.dims[2]));
    const std::size_t r = id / static_cast<size_t>(spec.dims[2]);
    iy = int(r % static_cast<size_t>(spec.dims[1]));
    ix = int(r / static_cast<size_t>(spec.dims[1]));
  };
  auto apply_op = [&](const std::vector<double>& lam, std::vector<double>& out) {
    // lam/out are full arrays; only unknown entries are meaningful
    for (std::size_t u = 0; u < unknowns.size(); ++u) {
      const std::size_t id = unknowns[u];
      int ix, iy, iz;
      node_coords(id, ix, iy, iz);
      double acc = 6.0 * lam[id];
      for (int ax = 0; ax < 3; ++ax) {
        int p[3] = {ix, iy, iz}, m[3] = {ix, iy, iz};
        p[ax] += 2;
        m[ax] -= 2;
        if (p[ax] <= spec.dims[static_cast<size_t>(ax)] - 1) {
          const std::size_t pid = spec.node_index(p[0], p[1], p[2]);
          if (inside[pid]) acc -= lam[pid];
        }
        if (m[ax] >= 0) {
          const std::size_t mid = spec.node_index(m[0], m[1], m[2]);
          if (inside[mid]) acc -= lam[mid];
        }
      }
      out[id] = acc * inv4h2;
    }
  };

  auto cg_solve = [&](const std::vector<double>& rhs, std::vector<double>& lam, int& iters,
                      double& rel) {
    lam.assign(nodes, 0.0);
    std::vector<double> r(nodes, 0.0), p(nodes, 0.0), ap(nodes, 0.0);
    double bnorm2 = 0.0;
    for (std::size_t id : unknowns) {
      r[id] = rhs[id];
      p[id] = rhs[id];
      bnorm2 += rhs[id] * rhs[id];
    }
    iters = 0;
    if (bnorm2 == 0.0) {
      rel = 0.0;
      return true;
    }
    double rr = bnorm2;
    const double target2 = opt.cg_tolerance * opt.cg_tolerance * bnorm2;
    while (iters < opt.cg_max_iterations && rr > target2) {
      apply_op(p, ap);
      double pap = 0.0;
      for (std::size_t id : unknowns) pap += p[id] * ap[id];
      const double alpha = rr / pap;
      double rr_new = 0.0;
      for (std::size_t id : unknowns) {
        lam[id] += alpha * p[id];
        r[id] -= alpha * ap[id];
        rr_new += r[id] * r[id];
      }
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t id : unknowns) p[id] = r[id] + beta * p[id];
      ++iters;
    }
    rel = std::sqrt(rr / bnorm2);
    return rr <= target2;
  };

  ScalarGridField lambda;
  lambda.spec = spec;
  lambda.inside = inside;
  lambda.values.assign(nodes, cplx(0.0));

  std::vector<double> rhs(nodes, 0.0), sol(nodes, 0.0);
  bool converged = true;
  int cg_iterations = 0;
  double cg_rel = 0.0;
  for (int part = 0; part < 2; ++part) {
    for (std::size_t id = 0; id < nodes; ++id)
      rhs[id] = part == 0 ? source[id].real() : source[id].imag();
    bool any = false;
    for (std::size_t id : unknowns)
      if (rhs[id] != 0.0) any = true;
    int it = 0;
    double rel = 0.0;
    bool ok = true;
    if (any)
      ok = cg_solve(rhs, sol, it, rel);
    else
      sol.assign(nodes, 0.0);
    converged = converged && ok;
    cg_iterations += it;
    cg_rel = std::max(cg_rel, rel);
    if (!ok) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "decompose: CG stalled after %d iterations, relative residual %.3e (target %.3e)",
                    it, rel, opt.cg_tolerance);
      throw std::runtime_error(buf);
    }
    for (std::size_t id : unknowns)
      lambda.values[id] += part == 0 ? cplx(sol[id], 0.0) : cplx(0.0, sol[id]);
  }

  // gradient of lambda by central differences (all nodes)
  std::vector<cplx> grad(nodes * 3, cplx(0.0));
  for (int ix = 0; ix < spec.dims[0]; ++ix)
    for (int iy = 0; iy < spec.dims[1]; ++iy)
      for (int iz = 0; iz < spec.dims[2]; ++iz) {
        const std::size_t id = spec.node_index(ix, iy, iz);
        for (int ax = 0; ax < 3; ++ax)
          grad[id * 3 + static_cast<size_t>(ax)] =
              detail::central_diff(lambda.values, spec, ix, iy, iz, ax);
      }

  // ftilde = f - L_{grad lambda} nodewise
  SymmetryClass cls = sampled.symmetry() == SymmetryClass::SkewHermitian
                          ? SymmetryClass::SkewHermitian
                          : SymmetryClass::General;
  std::vector<cplx> tv(sampled.values());
  for (std::size_t id = 0; id < nodes; ++id) {
    const cplx g1 = grad[id * 3 + 0];
    const cplx g2 = grad[id * 3 + 1];
    const cplx g3 = grad[id * 3 + 2];
    cplx* e = &tv[id * 9];
    // subtract L_v with v = grad lambda: rows (0,-v3,v2; v3,0,-v1; -v2,v1,0)
    e[1] += g3;
    e[2] -= g2;
    e[3] -= g3;
    e[5] += g1;
    e[6] += g2;
    e[7] -= g1;
  }
  return DecomposeResult{std::move(lambda), std::move(grad),
                         GridField(3, cls, spec, std::move(tv)), cg_iterations, cg_rel, converged};
}

}  // namespace ptomo
