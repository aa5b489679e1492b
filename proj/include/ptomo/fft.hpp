#pragma once

// Iterative radix-2 complex FFT, forward convention sum_k a_k e^{-2 pi i j k / N}.
// Grid sizes used by the Fourier residual checks are powers of two.

#include <complex>
#include <stdexcept>
#include <vector>

namespace ptomo {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_inplace(std::complex<double>* a, std::size_t n, bool inverse = false) {
  if (!is_power_of_two(n)) throw std::invalid_argument("fft length must be a power of two");
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? two_pi : -two_pi) / double(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (std::size_t i = 0; i < n; ++i) a[i] /= double(n);
}

// In-place 3D FFT on an n x n x n row-major array (z fastest).
inline void fft3_inplace(std::vector<std::complex<double>>& a, std::size_t n, bool inverse = false) {
  if (a.size() != n * n * n) throw std::invalid_argument("fft3: array size mismatch");
  std::vector<std::complex<double>> line(n);
  // z lines are contiguous
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) fft_inplace(&a[(x * n + y) * n], n, inverse);
  // y lines
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t z = 0; z < n; ++z) {
      for (std::size_t y = 0; y < n; ++y) line[y] = a[(x * n + y) * n + z];
      fft_inplace(line.data(), n, inverse);
      for (std::size_t y = 0; y < n; ++y) a[(x * n + y) * n + z] = line[y];
    }
  // x lines
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t z = 0; z < n; ++z) {
      for (std::size_t x = 0; x < n; ++x) line[x] = a[(x * n + y) * n + z];
      fft_inplace(line.data(), n, inverse);
      for (std::size_t x = 0; x < n; ++x) a[(x * n + y) * n + z] = line[x];
    }
}

}  // namespace ptomo
