#pragma once

// Matrix-valued coefficient fields over R^3: an abstract field interface,
// closed-form Gaussian-polynomial fields with exact derivatives, sampled
// grid fields with trilinear interpolation (zero outside their box), scalar
// fields with gradients, and ray-dependent weight fields.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ptomo/gausspoly.hpp"
#include "ptomo/linalg.hpp"
#include "ptomo/rng.hpp"

namespace ptomo {

enum class SymmetryClass : std::uint8_t { General = 0, Symmetric = 1, SkewHermitian = 2 };

inline const char* to_string(SymmetryClass c) {
  switch (c) {
    case SymmetryClass::General: return "general";
    case SymmetryClass::Symmetric: return "symmetric";
    case SymmetryClass::SkewHermitian: return "skew-hermitian";
  }
  return "general";
}

inline SymmetryClass symmetry_class_from_string(const std::string& s) {
  if (s == "general") return SymmetryClass::General;
  if (s == "symmetric") return SymmetryClass::Symmetric;
  if (s == "skew-hermitian") return SymmetryClass::SkewHermitian;
  throw std::invalid_argument("unknown symmetry class: " + s);
}

// Deviation of m from the declared class (0 for General).
inline double symmetry_defect(const CMat& m, SymmetryClass c) {
  double d = 0.0;
  const int n = m.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (c == SymmetryClass::Symmetric)
        d = std::max(d, std::abs(m(i, j) - m(j, i)));
      else if (c == SymmetryClass::SkewHermitian)
        d = std::max(d, std::abs(m(i, j) + std::conj(m(j, i))));
    }
  return d;
}

class MatrixField {
 public:
  MatrixField(int n, SymmetryClass sym) : n_(n), sym_(sym) { detail::check_dim(n); }
  virtual ~MatrixField() = default;

  int dim() const { return n_; }
  SymmetryClass symmetry() const { return sym_; }

  virtual CMat eval(const Vec& x) const = 0;
  virtual bool has_derivatives() const { return false; }
  virtual CMat d1(const Vec&, int) const {
    throw std::runtime_error("field does not provide first derivatives");
  }
  virtual CMat d2(const Vec&, int, int) const {
    throw std::runtime_error("field does not provide second derivatives");
  }

 protected:
  void check_symmetry_at(const std::vector<Vec>& pts, double tol = 1e-10) const {
    for (const Vec& x : pts) {
      const double d = symmetry_defect(eval(x), sym_);
      if (d > tol)
        throw std::invalid_argument(std::string("field violates declared symmetry class ") +
                                    to_string(sym_) + " (defect " + std::to_string(d) + ")");
    }
  }

 private:
  int n_;
  SymmetryClass sym_;
};

class CallableField final : public MatrixField {
 public:
  using EvalFn = std::function<CMat(const Vec&)>;
  using D1Fn = std::function<CMat(const Vec&, int)>;

  CallableField(int n, SymmetryClass sym, EvalFn f, D1Fn d1 = nullptr)
      : MatrixField(n, sym), f_(std::move(f)), d1_(std::move(d1)) {}

  CMat eval(const Vec& x) const override { return f_(x); }
  bool has_derivatives() const override { return bool(d1_); }
  CMat d1(const Vec& x, int k) const override {
    if (!d1_) throw std::runtime_error("field does not provide first derivatives");
    return d1_(x, k);
  }

 private:
  EvalFn f_;
  D1Fn d1_;
};

// n x n field whose entries are Gaussian-polynomial scalars. All derivatives
// are exact; derivative_field() differentiates the whole matrix entrywise.
class GaussPolyMatrixField final : public MatrixField {
 public:
  GaussPolyMatrixField(int n, SymmetryClass sym, std::array<std::array<GaussPoly, 4>, 4> entries)
      : MatrixField(n, sym), e_(std::move(entries)) {
    Rng rng(7);
    std::vector<Vec> pts;
    for (int k = 0; k < 8; ++k)
      pts.push_back(Vec(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
    check_symmetry_at(pts);
  }

  CMat eval(const Vec& x) const override {
    const int n = dim();
    CMat m(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = e_[static_cast<size_t>(i)][static_cast<size_t>(j)].eval(x);
    return m;
  }

  bool has_derivatives() const override { return true; }

  CMat d1(const Vec& x, int k) const override {
    ensure_d1();
    return eval_table(*d1_, k, x);
  }
  CMat d2(const Vec& x, int k, int l) const override {
    ensure_d2();
    return eval_table(*d2_, k * 3 + l, x);
  }

  GaussPolyMatrixField derivative_field(int axis) const {
    std::array<std::array<GaussPoly, 4>, 4> d;
    const int n = dim();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            e_[static_cast<size_t>(i)][static_cast<size_t>(j)].derivative(axis);
    return GaussPolyMatrixField(n, symmetry(), d);
  }

  const GaussPoly& entry(int i, int j) const {
    return e_[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }

  double support_radius(double eps = 1e-14) const {
    double r = 0.0;
    const int n = dim();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!entry(i, j).empty()) r = std::max(r, entry(i, j).support_radius(eps));
    return r;
  }

 private:
  using Table = std::vector<std::array<std::array<GaussPoly, 4>, 4>>;
  void ensure_d1() const {
    if (d1_) return;
    auto t = std::make_shared<Table>(3);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < dim(); ++i)
        for (int j = 0; j < dim(); ++j)
          (*t)[static_cast<size_t>(k)][static_cast<size_t>(i)][static_cast<size_t>(j)] =
              e_[static_cast<size_t>(i)][static_cast<size_t>(j)].derivative(k);
    d1_ = t;
  }
  void ensure_d2() const {
    ensure_d1();
    if (d2_) return;
    auto t = std::make_shared<Table>(9);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        for (int i = 0; i < dim(); ++i)
          for (int j = 0; j < dim(); ++j)
            (*t)[static_cast<size_t>(k * 3 + l)][static_cast<size_t>(i)][static_cast<size_t>(j)] =
                (*d1_)[static_cast<size_t>(k)][static_cast<size_t>(i)][static_cast<size_t>(j)]
                    .derivative(l);
    d2_ = t;
  }
  CMat eval_table(const Table& t, int slot, const Vec& x) const {
    const int n = dim();
    CMat m(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = t[static_cast<size_t>(slot)][static_cast<size_t>(i)][static_cast<size_t>(j)]
                      .eval(x);
    return m;
  }

  std::array<std::array<GaussPoly, 4>, 4> e_;
  mutable std::shared_ptr<Table> d1_;
  mutable std::shared_ptr<Table> d2_;
};

// Description of a regular node grid over a cube: dims[i] nodes per axis at
// uniform spacing, node (0,0,0) sitting at origin.
struct GridSpec {
  std::array<int, 3> dims{2, 2, 2};
  Vec origin{-1.0, -1.0, -1.0};
  double spacing = 1.0;

  GridSpec() = default;
  GridSpec(std::array<int, 3> d, const Vec& o, double h) : dims(d), origin(o), spacing(h) {
    for (int k = 0; k < 3; ++k)
      if (dims[static_cast<size_t>(k)] < 2)
        throw std::invalid_argument("grid needs at least 2 nodes per axis");
    if (!(h > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  }
  // Symmetric cube [-half, half]^3 with m nodes per axis.
  static GridSpec centered_cube(int m, double half) {
    return GridSpec({m, m, m}, Vec(-half, -half, -half), 2.0 * half / (m - 1));
  }

  std::size_t node_count() const {
    return static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]) *
           static_cast<size_t>(dims[2]);
  }
  std::size_t node_index(int ix, int iy, int iz) const {
    return (static_cast<size_t>(ix) * static_cast<size_t>(dims[1]) + static_cast<size_t>(iy)) *
               static_cast<size_t>(dims[2]) +
           static_cast<size_t>(iz);
  }
  Vec node_point(int ix, int iy, int iz) const {
    return Vec(origin[0] + spacing * ix, origin[1] + spacing * iy, origin[2] + spacing * iz);
  }
  bool operator==(const GridSpec& o) const {
    return dims == o.dims && spacing == o.spacing && origin[0] == o.origin[0] &&
           origin[1] == o.origin[1] && origin[2] == o.origin[2];
  }
};

// Sampled matrix field with trilinear interpolation between nodes and zero
// outside the grid box. Node evaluation reproduces stored values exactly.
class GridField final : public MatrixField {
 public:
  GridField(int n, SymmetryClass sym, const GridSpec& spec, std::vector<cplx> values)
      : MatrixField(n, sym), spec_(spec), v_(std::move(values)) {
    if (v_.size() != spec_.node_count() * static_cast<size_t>(n) * static_cast<size_t>(n))
      throw std::invalid_argument("grid value array has wrong size");
    validate_symmetry();
  }

  static GridField sample(const MatrixField& f, const GridSpec& spec) {
    const int n = f.dim();
    std::vector<cplx> v(spec.node_count() * static_cast<size_t>(n) * static_cast<size_t>(n));
    std::size_t p = 0;
    for (int ix = 0; ix < spec.dims[0]; ++ix)
      for (int iy = 0; iy < spec.dims[1]; ++iy)
        for (int iz = 0; iz < spec.dims[2]; ++iz) {
          const CMat m = f.eval(spec.node_point(ix, iy, iz));
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) v[p++] = m(i, j);
        }
    return GridField(n, f.symmetry(), spec, std::move(v));
  }

  const GridSpec& spec() const { return spec_; }
  const std::vector<cplx>& values() const { return v_; }

  CMat node_value(int ix, int iy, int iz) const {
    const int n = dim();
    CMat m(n);
    const cplx* p = &v_[spec_.node_index(ix, iy, iz) * static_cast<size_t>(n * n)];
    for (int k = 0; k < n * n; ++k) m.data()[k] = p[k];
    return m;
  }

  CMat eval(const Vec& x) const override {
    const int n = dim();
    CMat m(n);
    double u[3];
    int c[3];
    for (int ax = 0; ax < 3; ++ax) {
      const double t = (x[ax] - spec_.origin[ax]) / spec_.spacing;
      if (t < 0.0 || t > double(spec_.dims[static_cast<size_t>(ax)] - 1)) return m;  // outside
      int cell = int(t);
      if (cell > spec_.dims[static_cast<size_t>(ax)] - 2)
        cell = spec_.dims[static_cast<size_t>(ax)] - 2;
      c[ax] = cell;
      u[ax] = t - cell;
    }
    const int nn = n * n;
    for (int dx = 0; dx < 2; ++dx)
      for (int dy = 0; dy < 2; ++dy)
        for (int dz = 0; dz < 2; ++dz) {
          const double w = (dx ? u[0] : 1.0 - u[0]) * (dy ? u[1] : 1.0 - u[1]) *
                           (dz ? u[2] : 1.0 - u[2]);
          if (w == 0.0) continue;
          const cplx* p = &v_[spec_.node_index(c[0] + dx, c[1] + dy, c[2] + dz) *
                              static_cast<size_t>(nn)];
          for (int k = 0; k < nn; ++k) m.data()[k] += w * p[k];
        }
    return m;
  }

 private:
  void validate_symmetry() {
    if (symmetry() == SymmetryClass::General) return;
    const int n = dim();
    std::size_t stride = std::max<std::size_t>(1, spec_.node_count() / 64);
    for (std::size_t node = 0; node < spec_.node_count(); node += stride) {
      CMat m(n);
      const cplx* p = &v_[node * static_cast<size_t>(n * n)];
      for (int k = 0; k < n * n; ++k) m.data()[k] = p[k];
      const double d = symmetry_defect(m, symmetry());
      if (d > 1e-10)
        throw std::invalid_argument(std::string("grid values violate declared symmetry class ") +
                                    to_string(symmetry()));
    }
  }

  GridSpec spec_;
  std::vector<cplx> v_;
};

// Scalar field with closed-form gradient (and Laplacian where available).
struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<double(const Vec&)> laplacian;  // may be empty
};

// lambda(x) = (1 - |x|^2)^2 inside the unit ball, 0 outside. Vanishes on the
// boundary together with its gradient.
inline ScalarField lambda_flat_ball() {
  ScalarField s;
  s.value = [](const Vec& x) {
    const double r2 = dot(x, x);
    if (r2 >= 1.0) return 0.0;
    const double q = 1.0 - r2;
    return q * q;
  };
  s.gradient = [](const Vec& x) {
    const double r2 = dot(x, x);
    if (r2 >= 1.0) return Vec(0, 0, 0);
    return -4.0 * (1.0 - r2) * x;
  };
  s.laplacian = [](const Vec& x) {
    const double r2 = dot(x, x);
    if (r2 >= 1.0) return 0.0;
    return -12.0 + 20.0 * r2;
  };
  return s;
}

// lambda(x) = exp(-a |x|^2) (does not vanish on the boundary).
inline ScalarField lambda_gaussian(double a) {
  ScalarField s;
  s.value = [a](const Vec& x) { return std::exp(-a * dot(x, x)); };
  s.gradient = [a](const Vec& x) { return (-2.0 * a * std::exp(-a * dot(x, x))) * x; };
  s.laplacian = [a](const Vec& x) {
    const double r2 = dot(x, x);
    return (4.0 * a * a * r2 - 6.0 * a) * std::exp(-a * r2);
  };
  return s;
}

// lambda(x) = (1 - |x|^2/rho^2)^p for |x| < rho, 0 outside: a C^{p-1} bump
// supported strictly inside radius rho.
inline ScalarField lambda_interior_bump(double rho, int p = 4) {
  if (!(rho > 0.0) || p < 2) throw std::invalid_argument("bump needs rho > 0 and p >= 2");
  ScalarField s;
  const double r2max = rho * rho;
  s.value = [r2max, p](const Vec& x) {
    const double q = 1.0 - dot(x, x) / r2max;
    return q > 0.0 ? std::pow(q, p) : 0.0;
  };
  s.gradient = [r2max, p](const Vec& x) {
    const double q = 1.0 - dot(x, x) / r2max;
    if (q <= 0.0) return Vec(0, 0, 0);
    return (-2.0 * p * std::pow(q, p - 1) / r2max) * x;
  };
  s.laplacian = [r2max, p](const Vec& x) {
    const double r2 = dot(x, x);
    const double q = 1.0 - r2 / r2max;
    if (q <= 0.0) return 0.0;
    return -6.0 * p * std::pow(q, p - 1) / r2max +
           4.0 * p * (p - 1) * r2 * std::pow(q, p - 2) / (r2max * r2max);
  };
  return s;
}

// Weight attached to a phase point (x, xi); unit() is the identity weight and
// is recognized by fast paths downstream.
class WeightField {
 public:
  using Fn = std::function<CMat(const Vec&, const UnitVec&)>;

  static WeightField unit(int n) {
    WeightField w;
    w.n_ = n;
    return w;
  }
  WeightField(int n, Fn fn) : n_(n), fn_(std::move(fn)) {
    if (!fn_) throw std::invalid_argument("weight callback must be non-null");
  }

  int dim() const { return n_; }
  bool is_unit() const { return !fn_; }
  CMat eval(const Vec& x, const UnitVec& xi) const {
    if (!fn_) return CMat::identity(n_);
    return fn_(x, xi);
  }

 private:
  WeightField() = default;
  int n_ = 3;
  Fn fn_;
};

}  // namespace ptomo
