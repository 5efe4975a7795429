#pragma once
// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

namespace oracle {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  b %= m;
  for (; e; e >>= 1, b = mulmod(b, b, m))
    if (e & 1) r = mulmod(r, b, m);
  return r;
}

/// Deterministic Miller-Rabin for all 64-bit n.
inline bool miller_rabin(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37})
    if (n % p == 0) return n == p;
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Plain byte sieve over all integers.
inline std::vector<char> byte_sieve(std::uint64_t limit) {
  std::vector<char> s(limit + 1, 1);
  s[0] = 0;
  if (limit >= 1) s[1] = 0;
  for (std::uint64_t i = 2; i * i <= limit; ++i)
    if (s[i])
      for (std::uint64_t j = i * i; j <= limit; j += i) s[j] = 0;
  return s;
}

/// Legendre symbol from the count of square roots: #{x : x^2 = a} - 1.
inline int legendre_by_roots(std::int64_t a, std::uint64_t p) {
  std::int64_t r = a % static_cast<std::int64_t>(p);
  if (r < 0) r += static_cast<std::int64_t>(p);
  int roots = 0;
  for (std::uint64_t x = 0; x < p; ++x) roots += (x * x % p) == static_cast<std::uint64_t>(r);
  return roots - 1;
}

inline int mobius_naive(std::uint64_t n) {
  int mu = 1;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    n /= p;
    if (n % p == 0) return 0;
    mu = -mu;
  }
  return n > 1 ? -mu : mu;
}

inline std::uint64_t totient_by_gcd(std::uint64_t n) {
  std::uint64_t c = 0;
  for (std::uint64_t k = 1; k <= n; ++k) c += std::gcd(k, n) == 1;
  return c;
}

/// Representation count by direct per-n loop over a boolean sieve.
inline std::uint32_t count_naive(std::uint64_t n, unsigned m_min, const std::vector<char>& sieve) {
  std::uint32_t c = 0;
  for (std::uint64_t m = m_min; m * m < n; ++m) c += sieve[n - m * m] != 0;
  return c;
}

/// Gauss sum by the textbook complex exponential, no phase reduction.
inline std::complex<double> gauss_sum_naive(std::int64_t a, std::uint64_t q) {
  std::complex<double> s = 0;
  for (std::uint64_t m = 1; m <= q; ++m) {
    const double x = static_cast<double>(m) * static_cast<double>(m) * static_cast<double>(a) / static_cast<double>(q);
    s += std::polar(1.0, 2.0 * std::numbers::pi * (x - std::floor(x)));
  }
  return s;
}

/// Sigma(n,Q) by its multiplicative closed form: V vanishes for even q, and
/// for odd squarefree q the inner sum reduces so that
///   Sigma(n,Q) = sum_{odd squarefree q <= Q} prod_{p | q} ( -(n/p)/(p-1) ).
inline double sigma_closed_form(std::uint64_t n, std::uint64_t Q) {
  double total = 0.0;
  for (std::uint64_t q = 1; q <= Q; q += 2) {
    std::uint64_t r = q;
    double term = 1.0;
    bool squarefree = true;
    for (std::uint64_t p = 3; p * p <= r; p += 2) {
      if (r % p) continue;
      r /= p;
      if (r % p == 0) {
        squarefree = false;
        break;
      }
      term *= -legendre_by_roots(static_cast<std::int64_t>(n), p) / static_cast<double>(p - 1);
    }
    if (!squarefree) continue;
    if (r > 1) term *= -legendre_by_roots(static_cast<std::int64_t>(n), r) / static_cast<double>(r - 1);
    total += term;
  }
  return total;
}

/// Truncated Euler product with the symbol from Euler's criterion.
inline double euler_product_naive(std::uint64_t n, std::uint64_t cutoff, const std::vector<char>& sieve) {
  double v = 1.0;
  for (std::uint64_t p = 3; p <= cutoff; p += 2) {
    if (!sieve[p]) continue;
    const std::uint64_t r = n % p;
    if (r == 0) continue;
    const bool residue = powmod(r, (p - 1) / 2, p) == 1;
    v *= residue ? (1.0 - 1.0 / static_cast<double>(p - 1)) : (1.0 + 1.0 / static_cast<double>(p - 1));
  }
  return v;
}

}  // namespace oracle
