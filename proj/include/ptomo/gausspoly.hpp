#pragma once

// Trivariate complex polynomials and Gaussian-polynomial scalar fields
// p(x) * exp(-a|x|^2). The class is closed under differentiation, so first
// and second derivatives of such fields are available in closed form; that
// exactness is what the kernel-residual checks rely on.

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "ptomo/linalg.hpp"

namespace ptomo {

class Poly3 {
 public:
  Poly3() = default;
  explicit Poly3(cplx c) { add_term({0, 0, 0}, c); }

  static Poly3 monomial(int i, int j, int k, cplx c = 1.0) {
    Poly3 p;
    p.add_term({i, j, k}, c);
    return p;
  }

  void add_term(const std::array<int, 3>& e, cplx c) {
    if (e[0] < 0 || e[1] < 0 || e[2] < 0)
      throw std::invalid_argument("negative exponent in polynomial term");
    auto it = terms_.find(e);
    if (it == terms_.end())
      terms_.emplace(e, c);
    else
      it->second += c;
  }

  bool empty() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
    return d;
  }

  Poly3& operator+=(const Poly3& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  friend Poly3 operator+(Poly3 a, const Poly3& b) { return a += b; }

  Poly3& operator*=(cplx s) {
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }
  friend Poly3 operator*(cplx s, Poly3 p) { return p *= s; }
  friend Poly3 operator*(Poly3 p, cplx s) { return p *= s; }

  friend Poly3 operator*(const Poly3& a, const Poly3& b) {
    Poly3 r;
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_)
        r.add_term({ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}, ca * cb);
    return r;
  }

  Poly3 derivative(int axis) const {
    Poly3 r;
    for (const auto& [e, c] : terms_) {
      if (e[static_cast<size_t>(axis)] == 0) continue;
      std::array<int, 3> d = e;
      const int k = d[static_cast<size_t>(axis)]--;
      r.add_term(d, c * double(k));
    }
    return r;
  }

  Poly3 conjugate() const {  // conjugate coefficients; values conjugate at real x
    Poly3 r;
    for (const auto& [e, c] : terms_) r.add_term(e, std::conj(c));
    return r;
  }

  Poly3 shift_power(int axis, int by) const {  // multiply by x_axis^by
    Poly3 r;
    for (const auto& [e, c] : terms_) {
      std::array<int, 3> d = e;
      d[static_cast<size_t>(axis)] += by;
      r.add_term(d, c);
    }
    return r;
  }

  cplx eval(const Vec& x) const {
    const int dmax = degree();
    std::array<std::vector<double>, 3> pw;
    for (int ax = 0; ax < 3; ++ax) {
      pw[static_cast<size_t>(ax)].assign(static_cast<size_t>(dmax) + 1, 1.0);
      for (int k = 1; k <= dmax; ++k)
        pw[static_cast<size_t>(ax)][static_cast<size_t>(k)] =
            pw[static_cast<size_t>(ax)][static_cast<size_t>(k - 1)] * x[ax];
    }
    cplx s = 0.0;
    for (const auto& [e, c] : terms_)
      s += c * pw[0][static_cast<size_t>(e[0])] * pw[1][static_cast<size_t>(e[1])] *
           pw[2][static_cast<size_t>(e[2])];
    return s;
  }

  const std::map<std::array<int, 3>, cplx>& terms() const { return terms_; }

 private:
  std::map<std::array<int, 3>, cplx> terms_;
};

// p(x) * exp(-a |x|^2) with exact differentiation:
//   d/dx_k [p e^{-a r^2}] = (dp/dx_k - 2 a x_k p) e^{-a r^2}.
class GaussPoly {
 public:
  GaussPoly() : a_(1.0) {}
  GaussPoly(Poly3 p, double a) : p_(std::move(p)), a_(a) {
    if (!(a >= 0.0)) throw std::invalid_argument("Gaussian envelope rate must be nonnegative");
  }

  double envelope_rate() const { return a_; }
  const Poly3& poly() const { return p_; }
  bool empty() const { return p_.empty(); }

  cplx eval(const Vec& x) const {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    return p_.eval(x) * std::exp(-a_ * r2);
  }

  GaussPoly derivative(int axis) const {
    Poly3 q = p_.derivative(axis);
    q += p_.shift_power(axis, 1) * cplx(-2.0 * a_);
    return GaussPoly(std::move(q), a_);
  }

  GaussPoly& operator+=(const GaussPoly& o) {
    if (p_.empty()) {
      *this = o;
      return *this;
    }
    if (!o.p_.empty() && std::abs(a_ - o.a_) > 0.0)
      throw std::invalid_argument("cannot add Gaussian-polynomial fields with different envelopes");
    p_ += o.p_;
    return *this;
  }
  friend GaussPoly operator+(GaussPoly a, const GaussPoly& b) { return a += b; }
  friend GaussPoly operator*(cplx s, GaussPoly g) {
    g.p_ *= s;
    return g;
  }

  // Radius beyond which |p(x)| exp(-a r^2) is below eps for |coeffs|-bounded p.
  double support_radius(double eps = 1e-14) const {
    if (a_ <= 0.0) return std::numeric_limits<double>::infinity();
    double cmax = 0.0;
    for (const auto& [e, c] : p_.terms()) cmax = std::max(cmax, std::abs(c));
    if (cmax == 0.0) return 0.0;
    const double d = p_.degree();
    double r = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double nterms = double(p_.terms().size());
      const double bound = cmax * nterms * std::pow(std::max(r, 1.0), d) * std::exp(-a_ * r * r);
      if (bound < eps) return r;
      r *= 1.1;
    }
    return r;
  }

 private:
  Poly3 p_;
  double a_;
};

}  // namespace ptomo
