#pragma once
// Exponential sums of the circle method: quadratic Gauss sums, the truncated
// singular series built from them, the prime and square generating sums, and
// the exact coefficient identity R(n) = int_0^1 P(a) F(a) e(-na) da.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "psq/arith.hpp"
#include "psq/error.hpp"
#include "psq/fft.hpp"
#include "psq/repr.hpp"

namespace psq {

using ComplexValue = std::complex<double>;

/// Neumaier-compensated accumulator; works for double and std::complex<double>.
template <class T>
class CompensatedSum {
 public:
  void add(T x) {
    if constexpr (std::is_same_v<T, double>) {
      add_real(sum_, comp_, x);
    } else {
      double sr = sum_.real(), cr = comp_.real(), si = sum_.imag(), ci = comp_.imag();
      add_real(sr, cr, x.real());
      add_real(si, ci, x.imag());
      sum_ = {sr, si};
      comp_ = {cr, ci};
    }
  }
  T value() const { return sum_ + comp_; }

 private:
  static void add_real(double& s, double& c, double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  T sum_{};
  T comp_{};
};

/// e(r/q) for an integer numerator; the phase is reduced exactly before any
/// floating point is involved.
inline ComplexValue unit_root(std::int64_t r, std::uint64_t q) {
  const auto qs = static_cast<std::int64_t>(q);
  std::int64_t k = r % qs;
  if (k < 0) k += qs;
  const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(q);
  return {std::cos(ang), std::sin(ang)};
}

/// e(x) for real x, reducing x mod 1 first.
inline ComplexValue unit_phase(double x) {
  const double frac = x - std::floor(x);
  const double ang = 2.0 * std::numbers::pi * frac;
  return {std::cos(ang), std::sin(ang)};
}

/// V(a,q) = sum_{m=1}^{q} e(m^2 a / q), summed term by term.
inline ComplexValue gauss_sum_V(std::int64_t a, std::uint64_t q) {
  if (q == 0) throw DomainError("gauss_sum_V: q must be positive");
  const auto qs = static_cast<__int128>(q);
  __int128 ar = static_cast<__int128>(a) % qs;
  if (ar < 0) ar += qs;
  CompensatedSum<ComplexValue> s;
  for (std::uint64_t m = 1; m <= q; ++m) {
    const __int128 sq = static_cast<__int128>(m % q) * (m % q) % qs;
    s.add(unit_root(static_cast<std::int64_t>(sq * ar % qs), q));
  }
  return s.value();
}

/// Truncated singular series through Gauss sums:
///   Sigma(n,Q) = sum_{q<=Q} mu(q)/(q phi(q)) sum*_{a mod q} V(a,q) e(-na/q).
///
/// The V(a,q) for every squarefree q <= max_Q and reduced a are computed
/// once, so many n can be evaluated cheaply.
class GaussSeries {
 public:
  explicit GaussSeries(std::uint64_t max_Q) : max_Q_(max_Q) {
    if (max_Q == 0) throw DomainError("GaussSeries: Q must be positive");
    if (max_Q > 20000) throw ResourceError("GaussSeries: Q above 20000 is not supported");
    for (std::uint64_t q = 1; q <= max_Q; ++q) {
      const Factorization f = factorize(q);
      const int mu = mobius(f);
      if (mu == 0) continue;
      Modulus mod;
      mod.q = q;
      mod.weight = static_cast<double>(mu) / (static_cast<double>(q) * static_cast<double>(totient(f)));
      fill_gauss_sums(mod);
      moduli_.push_back(std::move(mod));
    }
  }

  std::uint64_t max_Q() const noexcept { return max_Q_; }

  /// Per-modulus terms t_q for q <= Q (squarefree q only; others vanish).
  std::vector<std::pair<std::uint64_t, ComplexValue>> terms(std::uint64_t n, std::uint64_t Q) const {
    if (Q > max_Q_) throw DomainError("GaussSeries: Q beyond the precomputed range");
    std::vector<std::pair<std::uint64_t, ComplexValue>> out;
    for (const Modulus& mod : moduli_) {
      if (mod.q > Q) break;
      const auto nq = static_cast<std::int64_t>(n % mod.q);
      CompensatedSum<ComplexValue> inner;
      for (std::size_t j = 0; j < mod.residues.size(); ++j) {
        const auto a = static_cast<std::int64_t>(mod.residues[j]);
        inner.add(mod.V[j] * unit_root(-nq * a, mod.q));
      }
      out.emplace_back(mod.q, mod.weight * inner.value());
    }
    return out;
  }

  /// Real part of the assembled sum. Terms are added in descending
  /// magnitude so the result does not depend on how q is enumerated.
  double value(std::uint64_t n, std::uint64_t Q) const {
    if (n == 0) throw DomainError("sigma_nQ: n must be positive");
    auto ts = terms(n, Q);
    std::stable_sort(ts.begin(), ts.end(),
                     [](const auto& x, const auto& y) { return std::abs(x.second) > std::abs(y.second); });
    CompensatedSum<ComplexValue> s;
    std::size_t count = 0;
    for (const auto& [q, t] : ts) {
      s.add(t);
      count += static_cast<std::size_t>(totient(q));
    }
    const ComplexValue total = s.value();
    if (std::abs(total.imag()) >= 1e-6 * static_cast<double>(std::max<std::size_t>(count, 1)))
      throw VerificationError("sigma_nQ: imaginary part " + std::to_string(total.imag()) + " too large");
    return total.real();
  }

 private:
  struct Modulus {
    std::uint64_t q = 1;
    double weight = 1.0;                  // mu(q) / (q phi(q))
    std::vector<std::uint64_t> residues;  // reduced a in [1, q]
    std::vector<ComplexValue> V;          // V(a, q) for each residue
  };

  // Histogram of m^2 mod q, then V(a,q) = sum_r count(r) e(ra/q) with a
  // precomputed table of q-th roots of unity.
  static void fill_gauss_sums(Modulus& mod) {
    const std::uint64_t q = mod.q;
    std::vector<std::uint32_t> hist(q, 0);
    for (std::uint64_t m = 1; m <= q; ++m) ++hist[(m % q) * (m % q) % q];
    std::vector<ComplexValue> roots(q);
    for (std::uint64_t k = 0; k < q; ++k) roots[k] = unit_root(static_cast<std::int64_t>(k), q);
    std::vector<std::uint64_t> support;
    for (std::uint64_t r = 0; r < q; ++r)
      if (hist[r]) support.push_back(r);
    for (std::uint64_t a = 1; a <= q; ++a) {
      if (std::gcd(a, q) != 1) continue;
      CompensatedSum<ComplexValue> s;
      for (std::uint64_t r : support) s.add(static_cast<double>(hist[r]) * roots[r * a % q]);
      mod.residues.push_back(a);
      mod.V.push_back(s.value());
    }
  }

  std::uint64_t max_Q_;
  std::vector<Modulus> moduli_;
};

inline double sigma_nQ(std::uint64_t n, std::uint64_t Q) { return GaussSeries(Q).value(n, Q); }

/// P(alpha) = sum_{Q<p<=N} log p e(p alpha).
inline ComplexValue eval_P_alpha(double alpha, std::uint64_t Q, std::uint64_t N, const PrimeTable& table) {
  if (N > table.limit()) throw DomainError("eval_P_alpha: N exceeds prime table limit");
  if (Q >= N) throw DomainError("eval_P_alpha: need Q < N");
  CompensatedSum<ComplexValue> s;
  table.for_each_prime(Q + 1, N, [&](std::uint64_t p) {
    const double pd = static_cast<double>(p);
    const double t = pd * alpha;
    const double err = std::fma(pd, alpha, -t);  // t + err == p*alpha exactly
    const double frac = (t - std::floor(t)) + err;
    s.add(std::log(pd) * unit_phase(frac));
  });
  return s.value();
}

/// Squares in the window sqrt(N)/2 < m <= sqrt(N) as [m_lo, m_hi].
inline std::pair<std::uint64_t, std::uint64_t> square_window(std::uint64_t N) {
  const std::uint64_t m_hi = isqrt(N);
  std::uint64_t m_lo = isqrt(N / 4);
  while (4 * m_lo * m_lo <= N) ++m_lo;
  return {m_lo, m_hi};
}

/// F(alpha) = sum_{sqrt(N)/2 < m <= sqrt(N)} e(m^2 alpha).
inline ComplexValue eval_F_alpha(double alpha, std::uint64_t N) {
  if (N < 4) throw DomainError("eval_F_alpha: N must be at least 4");
  const auto [m_lo, m_hi] = square_window(N);
  CompensatedSum<ComplexValue> s;
  for (std::uint64_t m = m_lo; m <= m_hi; ++m) {
    const double sq = static_cast<double>(m * m);
    const double t = sq * alpha;
    const double err = std::fma(sq, alpha, -t);
    s.add(unit_phase((t - std::floor(t)) + err));
  }
  return s.value();
}

struct CircleRow {
  std::uint64_t n = 0;
  double direct = 0.0;
  double convolved = 0.0;
  double abs_err() const { return std::abs(direct - convolved); }
};

inline constexpr std::uint64_t kMaxCircleN = 100000;

/// R(n) for N/2 < n <= N two ways: the direct double loop, and the
/// coefficient of x^n in (sum log p x^p)(sum x^{m^2}) via FFT.
inline std::vector<CircleRow> circle_identity_check(std::uint64_t N, const PrimeTable& table, std::uint64_t Q = 0) {
  if (N < 16) throw DomainError("circle_identity_check: N must be at least 16");
  if (N > kMaxCircleN) throw ResourceError("circle_identity_check: N above 10^5 is not supported");
  if (N > table.limit()) throw DomainError("circle_identity_check: N exceeds prime table limit");

  std::vector<double> prime_poly(N + 1, 0.0), square_poly(N + 1, 0.0);
  table.for_each_prime(Q + 1, N, [&](std::uint64_t p) { prime_poly[p] = std::log(static_cast<double>(p)); });
  const auto [m_lo, m_hi] = square_window(N);
  for (std::uint64_t m = m_lo; m <= m_hi; ++m) square_poly[m * m] = 1.0;
  const std::vector<double> product = fft::convolve_real(prime_poly, square_poly);

  std::vector<CircleRow> rows;
  rows.reserve(N - N / 2);
  for (std::uint64_t n = N / 2 + 1; n <= N; ++n)
    rows.push_back({n, windowed_weight(n, N, Q, table), product[n]});
  return rows;
}

struct ParsevalCheck {
  std::uint64_t N = 0, Q = 0;
  double sum_log_sq = 0.0;       // sum_{Q<p<=N} log^2 p
  double mean_square_P = 0.0;    // mean of |P(k/L)|^2 over L >= N+1 points
  double ratio = 0.0;            // sum_log_sq / (N log N)
};

/// Discrete Parseval: with L > N sample points the mean of |P(k/L)|^2 equals
/// sum log^2 p exactly, so both numbers are reported.
inline ParsevalCheck parseval_check(std::uint64_t N, std::uint64_t Q, const PrimeTable& table) {
  if (N > table.limit()) throw DomainError("parseval_check: N exceeds prime table limit");
  if (Q >= N || N < 3) throw DomainError("parseval_check: need 2 < N and Q < N");
  if (N > (std::uint64_t{1} << 24)) throw ResourceError("parseval_check: N too large for the FFT route");
  ParsevalCheck r;
  r.N = N;
  r.Q = Q;
  CompensatedSum<double> s;
  const std::size_t L = std::bit_ceil(static_cast<std::size_t>(N + 1));
  std::vector<fft::cplx> coeffs(L);
  table.for_each_prime(Q + 1, N, [&](std::uint64_t p) {
    const double lp = std::log(static_cast<double>(p));
    s.add(lp * lp);
    coeffs[p] = lp;
  });
  r.sum_log_sq = s.value();
  fft::transform(coeffs, false);
  CompensatedSum<double> ms;
  for (const auto& c : coeffs) ms.add(std::norm(c));
  r.mean_square_P = ms.value() / static_cast<double>(L);
  r.ratio = r.sum_log_sq / (static_cast<double>(N) * std::log(static_cast<double>(N)));
  return r;
}

}  // namespace psq
