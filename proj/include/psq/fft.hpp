#pragma once
// Radix-2 FFT and real linear convolution, enough for coefficient
// extraction from products of generating polynomials.

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "psq/error.hpp"

namespace psq::fft {

using cplx = std::complex<double>;

/// In-place transform; size must be a power of two. inverse=true applies
/// the conjugate transform and the 1/L scaling.
inline void transform(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || !std::has_single_bit(n)) throw DomainError("fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  // Twiddles from the exact angle of each index, not by repeated multiplication.
  std::vector<cplx> root(n / 2);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    root[k] = {std::cos(ang), sign * std::sin(ang)};
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2, stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + half] * root[k * stride];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double s = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= s;
  }
}

/// Linear convolution of two real sequences. Both inputs share one complex
/// transform (x in the real part, y in the imaginary part) and are separated
/// by conjugate symmetry before the pointwise product.
inline std::vector<double> convolve_real(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) return {};
  const std::size_t out_len = x.size() + y.size() - 1;
  const std::size_t n = std::bit_ceil(out_len);
  std::vector<cplx> z(n);
  for (std::size_t i = 0; i < x.size(); ++i) z[i].real(x[i]);
  for (std::size_t i = 0; i < y.size(); ++i) z[i].imag(y[i]);
  transform(z, false);
  std::vector<cplx> prod(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx zk = z[k];
    const cplx zc = std::conj(z[(n - k) & (n - 1)]);
    const cplx xk = 0.5 * (zk + zc);
    const cplx yk = cplx(0.0, -0.5) * (zk - zc);
    prod[k] = xk * yk;
  }
  transform(prod, true);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = prod[i].real();
  return out;
}

}  // namespace psq::fft
