#pragma once

// Small dense complex matrices and real vectors of dimension 3 or 4.
// Everything in this library works on n x n complex matrices with n in {3,4};
// the dimension is a runtime value so transport/inversion code stays generic.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace ptomo {

using cplx = std::complex<double>;

inline constexpr int kMaxDim = 4;

namespace detail {
inline void check_dim(int n) {
  if (n < 1 || n > kMaxDim)
    throw std::invalid_argument("dimension must be between 1 and 4, got " + std::to_string(n));
}
}  // namespace detail

// Real vector with runtime dimension (capacity 4).
class Vec {
 public:
  Vec() : n_(3) { a_.fill(0.0); }
  explicit Vec(int n) : n_(n) {
    detail::check_dim(n);
    a_.fill(0.0);
  }
  Vec(double x, double y, double z) : n_(3) { a_ = {x, y, z, 0.0}; }
  Vec(double x, double y, double z, double w) : n_(4) { a_ = {x, y, z, w}; }

  int dim() const { return n_; }
  double& operator[](int i) { return a_[static_cast<size_t>(i)]; }
  double operator[](int i) const { return a_[static_cast<size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n_; ++i) a_[i] += o.a_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n_; ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n_; ++i) a_[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }

 private:
  std::array<double, kMaxDim> a_;
  int n_;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec cross(const Vec& a, const Vec& b) {
  return Vec(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]);
}

// Unit direction. Constructors validate |v| = 1 to 1e-12; use normalized()
// when starting from a generic vector.
class UnitVec {
 public:
  explicit UnitVec(const Vec& v) : v_(v) { validate(); }
  UnitVec(double x, double y, double z) : v_(x, y, z) { validate(); }
  UnitVec(double x, double y, double z, double w) : v_(x, y, z, w) { validate(); }

  static UnitVec normalized(const Vec& v) {
    double r = norm(v);
    if (!(r > 0.0)) throw std::invalid_argument("cannot normalize zero vector");
    return UnitVec(v * (1.0 / r), 0);
  }

  int dim() const { return v_.dim(); }
  double operator[](int i) const { return v_[i]; }
  const Vec& vec() const { return v_; }

 private:
  UnitVec(const Vec& v, int) : v_(v) {}  // pre-normalized
  void validate() const {
    if (std::abs(norm(v_) - 1.0) > 1e-12)
      throw std::invalid_argument("direction is not unit length within 1e-12");
  }
  Vec v_;
};

// Complex vector with runtime dimension (capacity 4).
class CVec {
 public:
  CVec() : n_(3) { a_.fill(cplx(0.0)); }
  explicit CVec(int n) : n_(n) {
    detail::check_dim(n);
    a_.fill(cplx(0.0));
  }
  CVec(cplx x, cplx y, cplx z) : n_(3) { a_ = {x, y, z, cplx(0.0)}; }
  CVec(const Vec& v) : n_(v.dim()) {
    a_.fill(cplx(0.0));
    for (int i = 0; i < n_; ++i) a_[i] = cplx(v[i]);
  }

  int dim() const { return n_; }
  cplx& operator[](int i) { return a_[static_cast<size_t>(i)]; }
  cplx operator[](int i) const { return a_[static_cast<size_t>(i)]; }

  CVec& operator+=(const CVec& o) {
    if (o.n_ != n_) throw std::invalid_argument("CVec: dimension mismatch");
    for (int i = 0; i < n_; ++i) a_[static_cast<size_t>(i)] += o.a_[static_cast<size_t>(i)];
    return *this;
  }
  CVec& operator-=(const CVec& o) {
    if (o.n_ != n_) throw std::invalid_argument("CVec: dimension mismatch");
    for (int i = 0; i < n_; ++i) a_[static_cast<size_t>(i)] -= o.a_[static_cast<size_t>(i)];
    return *this;
  }
  CVec& operator*=(cplx s) {
    for (int i = 0; i < n_; ++i) a_[static_cast<size_t>(i)] *= s;
    return *this;
  }
  friend CVec operator+(CVec a, const CVec& b) { return a += b; }
  friend CVec operator-(CVec a, const CVec& b) { return a -= b; }
  friend CVec operator*(cplx s, CVec a) { return a *= s; }

 private:
  std::array<cplx, kMaxDim> a_;
  int n_;
};

inline double norm(const CVec& a) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += std::norm(a[i]);
  return std::sqrt(s);
}

// Dense row-major n x n complex matrix, n in {1..4}.
class CMat {
 public:
  CMat() : n_(3) { a_.fill(cplx(0.0)); }
  explicit CMat(int n) : n_(n) {
    detail::check_dim(n);
    a_.fill(cplx(0.0));
  }

  static CMat zero(int n) { return CMat(n); }
  static CMat identity(int n) {
    CMat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int dim() const { return n_; }
  cplx& operator()(int i, int j) { return a_[static_cast<size_t>(i * n_ + j)]; }
  cplx operator()(int i, int j) const { return a_[static_cast<size_t>(i * n_ + j)]; }
  cplx* data() { return a_.data(); }
  const cplx* data() const { return a_.data(); }

  CMat& operator+=(const CMat& o) {
    if (o.n_ != n_) throw std::invalid_argument("CMat: dimension mismatch");
    for (int k = 0; k < n_ * n_; ++k) a_[k] += o.a_[k];
    return *this;
  }
  CMat& operator-=(const CMat& o) {
    if (o.n_ != n_) throw std::invalid_argument("CMat: dimension mismatch");
    for (int k = 0; k < n_ * n_; ++k) a_[k] -= o.a_[k];
    return *this;
  }
  CMat& operator*=(cplx s) {
    for (int k = 0; k < n_ * n_; ++k) a_[k] *= s;
    return *this;
  }
  CMat& operator*=(double s) {
    for (int k = 0; k < n_ * n_; ++k) a_[k] *= s;
    return *this;
  }

  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(cplx s, CMat a) { return a *= s; }
  friend CMat operator*(CMat a, cplx s) { return a *= s; }
  friend CMat operator*(double s, CMat a) { return a *= s; }
  friend CMat operator*(CMat a, double s) { return a *= s; }

  friend CMat operator*(const CMat& a, const CMat& b) {
    const int n = a.n_;
    CMat c(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const cplx aik = a(i, k);
        for (int j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  CMat transpose() const {
    CMat t(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }
  CMat conj() const {
    CMat t(n_);
    for (int k = 0; k < n_ * n_; ++k) t.a_[k] = std::conj(a_[k]);
    return t;
  }
  CMat adjoint() const {
    CMat t(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) t(j, i) = std::conj((*this)(i, j));
    return t;
  }

  cplx trace() const {
    cplx s = 0.0;
    for (int i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
  }

  double frob_norm_sq() const {
    double s = 0.0;
    for (int k = 0; k < n_ * n_; ++k) s += std::norm(a_[k]);
    return s;
  }
  double frob_norm() const { return std::sqrt(frob_norm_sq()); }

  double max_abs() const {
    double m = 0.0;
    for (int k = 0; k < n_ * n_; ++k) m = std::max(m, std::abs(a_[k]));
    return m;
  }

  bool all_finite() const {
    for (int k = 0; k < n_ * n_; ++k)
      if (!std::isfinite(a_[k].real()) || !std::isfinite(a_[k].imag())) return false;
    return true;
  }

 private:
  std::array<cplx, kMaxDim * kMaxDim> a_;
  int n_;
};

// y = A x
inline CVec apply(const CMat& a, const CVec& x) {
  const int n = a.dim();
  CVec y(n);
  for (int i = 0; i < n; ++i) {
    cplx s = 0.0;
    for (int j = 0; j < n; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline CVec apply(const CMat& a, const Vec& x) { return apply(a, CVec(x)); }

// Determinant by cofactor expansion (n <= 4).
inline cplx det(const CMat& m) {
  const int n = m.dim();
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (n == 3)
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  cplx s = 0.0;
  for (int j = 0; j < 4; ++j) {
    CMat sub(3);
    for (int r = 1; r < 4; ++r) {
      int cc = 0;
      for (int c = 0; c < 4; ++c) {
        if (c == j) continue;
        sub(r - 1, cc++) = m(r, c);
      }
    }
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    s += sign * m(0, j) * det(sub);
  }
  return s;
}

// LU inverse with partial pivoting. Throws std::runtime_error on a pivot
// below tol relative to the matrix scale; *cond_estimate (optional) receives
// max|a| / min|pivot| as a cheap conditioning indicator.
inline CMat inverse(const CMat& m, double* cond_estimate = nullptr, double tol = 1e-13) {
  const int n = m.dim();
  CMat a = m;
  CMat inv = CMat::identity(n);
  const double scale = std::max(m.max_abs(), 1e-300);
  double min_pivot = scale;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(a(r, col));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (piv != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a(col, c), a(piv, c));
        std::swap(inv(col, c), inv(piv, c));
      }
    }
    min_pivot = std::min(min_pivot, best);
    if (cond_estimate) *cond_estimate = scale / std::max(min_pivot, 1e-300);
    if (best <= tol * scale) throw std::runtime_error("matrix is numerically singular");
    const cplx d = a(col, col);
    for (int c = 0; c < n; ++c) {
      a(col, c) /= d;
      inv(col, c) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const cplx f = a(r, col);
      if (f == cplx(0.0)) continue;
      for (int c = 0; c < n; ++c) {
        a(r, c) -= f * a(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

}  // namespace ptomo
