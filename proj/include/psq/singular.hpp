#pragma once
// The singular series as a truncated Euler product over odd primes,
// the local densities rho_k(p, n), and the comparison with the Gauss-sum
// route of expsums.hpp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "psq/arith.hpp"
#include "psq/error.hpp"
#include "psq/expsums.hpp"
#include "psq/parallel.hpp"

namespace psq {

inline std::uint64_t pow_mod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  unsigned __int128 r = 1 % m, x = b % m;
  for (; e; e >>= 1) {
    if (e & 1) r = r * x % m;
    x = x * x % m;
  }
  return static_cast<std::uint64_t>(r);
}

inline constexpr std::uint64_t kExhaustiveRhoBelow = 1024;

/// #{0 <= m < p : m^k == n (mod p)}.
inline std::uint64_t local_density_rho(unsigned k, std::uint64_t p, std::int64_t n) {
  if (k < 2) throw DomainError("local_density_rho: k must be at least 2");
  if (!is_prime_trial(p)) throw DomainError("local_density_rho: " + std::to_string(p) + " is not prime");
  std::int64_t r = n % static_cast<std::int64_t>(p);
  if (r < 0) r += static_cast<std::int64_t>(p);
  const auto res = static_cast<std::uint64_t>(r);
  if (p < kExhaustiveRhoBelow) {
    std::uint64_t c = 0;
    for (std::uint64_t m = 0; m < p; ++m) c += pow_mod(m, k, p) == res;
    return c;
  }
  if (res == 0) return 1;
  if (k == 2) return static_cast<std::uint64_t>(1 + jacobi(static_cast<std::int64_t>(res), static_cast<std::int64_t>(p)));
  // Cyclic group of order p-1: n is a k-th power iff n^((p-1)/d) == 1, d = gcd(k, p-1),
  // and then it has exactly d k-th roots.
  const std::uint64_t d = std::gcd<std::uint64_t>(k, p - 1);
  return pow_mod(res, (p - 1) / d, p) == 1 ? d : 0;
}

struct SeriesEstimate {
  std::uint64_t n = 0;
  double value = 1.0;
  std::uint64_t cutoff = 0;     // largest prime included
  double tail_estimate = 0.0;   // spread of the log running product over the last decade of primes
  bool square_input = false;    // the product tends to 0 for squares; consumers must not divide by it

  bool operator==(const SeriesEstimate&) const = default;
};

inline constexpr std::uint64_t kDefaultPrimeCutoff = 100000;

/// Truncated Euler product prod_{3 <= p <= cutoff} (1 - (n/p)/(p-1)).
///
/// One instance holds the odd primes up to the cutoff, their two nontrivial
/// factors, and a bit table of quadratic residues per prime for bulk
/// evaluation. The single-n and bulk paths multiply the same doubles in the
/// same order, so they agree bit for bit.
class EulerProduct {
 public:
  explicit EulerProduct(std::uint64_t prime_cutoff) {
    if (prime_cutoff < 3) throw DomainError("singular_series: prime cutoff must be at least 3");
    if (prime_cutoff > (std::uint64_t{1} << 31)) throw ResourceError("singular_series: prime cutoff too large");
    const PrimeTable table(prime_cutoff);
    table.for_each_prime(3, prime_cutoff, [&](std::uint64_t p) {
      Factor f;
      f.p = p;
      const double inv = 1.0 / static_cast<double>(p - 1);
      f.residue_factor = 1.0 - inv;
      f.nonresidue_factor = 1.0 + inv;
      f.bit_offset = residue_bit_count_;
      residue_bit_count_ += p;
      factors_.push_back(f);
    });
    cutoff_ = factors_.back().p;
    tail_start_ = prime_cutoff / 10;
  }

  std::uint64_t cutoff() const noexcept { return cutoff_; }
  std::size_t prime_count() const noexcept { return factors_.size(); }

  SeriesEstimate evaluate(std::uint64_t n) const {
    if (n == 0) throw DomainError("singular_series: n must be positive");
    double v = 1.0, lo = INFINITY, hi = -INFINITY;
    for (const Factor& f : factors_) {
      const std::uint64_t r = n % f.p;
      if (r != 0) {
        const int s = jacobi(static_cast<std::int64_t>(r), static_cast<std::int64_t>(f.p));
        v *= s > 0 ? f.residue_factor : f.nonresidue_factor;
      }
      if (f.p >= tail_start_) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    return finish(n, v, lo, hi);
  }

  /// Values for every n in [lo, hi], in order.
  std::vector<SeriesEstimate> evaluate_range(std::uint64_t lo, std::uint64_t hi, unsigned threads = 1) const {
    if (lo == 0) throw DomainError("singular_series: n must be positive");
    if (lo > hi) return {};
    ensure_residue_bits();
    const std::uint64_t len = hi - lo + 1;
    std::vector<SeriesEstimate> out(len);
    const std::uint64_t chunks = (len + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
      const std::uint64_t c_lo = lo + c * kChunk;
      const std::uint64_t c_len = std::min<std::uint64_t>(kChunk, hi - c_lo + 1);
      evaluate_chunk(c_lo, c_len, out.data() + (c_lo - lo));
    });
    return out;
  }

 private:
  struct Factor {
    std::uint64_t p = 0;
    double residue_factor = 1.0;
    double nonresidue_factor = 1.0;
    std::uint64_t bit_offset = 0;  // start of this prime's residue bits
  };

  static constexpr std::uint64_t kChunk = 1 << 14;

  SeriesEstimate finish(std::uint64_t n, double v, double lo, double hi) const {
    SeriesEstimate e;
    e.n = n;
    e.value = v;
    e.cutoff = cutoff_;
    e.square_input = is_square(n);
    const double lv = std::log(v);
    e.tail_estimate = std::max(std::abs(std::log(hi) - lv), std::abs(std::log(lo) - lv));
    return e;
  }

  // Bit r of a prime's block is set when r is a nonzero square mod p.
  void ensure_residue_bits() const {
    std::call_once(bits_once_, [this] {
      residue_bits_.assign((residue_bit_count_ + 63) / 64, 0);
      for (const Factor& f : factors_) {
        std::uint64_t sq = 0;
        for (std::uint64_t x = 1; x <= (f.p - 1) / 2; ++x) {
          sq += 2 * x - 1;  // x^2 = (x-1)^2 + 2x - 1
          if (sq >= f.p) sq -= f.p;
          const std::uint64_t b = f.bit_offset + sq;
          residue_bits_[b >> 6] |= std::uint64_t{1} << (b & 63);
        }
      }
    });
  }

  bool residue_bit(const Factor& f, std::uint64_t r) const {
    const std::uint64_t b = f.bit_offset + r;
    return (residue_bits_[b >> 6] >> (b & 63)) & 1;
  }

  void evaluate_chunk(std::uint64_t lo, std::uint64_t len, SeriesEstimate* out) const {
    std::vector<double> v(len, 1.0), mn(len, INFINITY), mx(len, -INFINITY);
    for (const Factor& f : factors_) {
      const bool tail = f.p >= tail_start_;
      std::uint64_t r = lo % f.p;
      for (std::uint64_t j = 0; j < len;) {
        const std::uint64_t run = std::min<std::uint64_t>(len - j, f.p - r);
        // residues r, r+1, ..., r+run-1 without wrapping
        std::uint64_t k = 0;
        if (r == 0) k = 1;  // factor 1 at p | n
        for (; k < run; ++k) v[j + k] *= residue_bit(f, r + k) ? f.residue_factor : f.nonresidue_factor;
        if (tail) {
          for (k = 0; k < run; ++k) {
            mn[j + k] = std::min(mn[j + k], v[j + k]);
            mx[j + k] = std::max(mx[j + k], v[j + k]);
          }
        }
        j += run;
        r = 0;
      }
    }
    for (std::uint64_t j = 0; j < len; ++j) out[j] = finish(lo + j, v[j], mn[j], mx[j]);
  }

  std::vector<Factor> factors_;
  std::uint64_t residue_bit_count_ = 0;
  std::uint64_t cutoff_ = 0;
  std::uint64_t tail_start_ = 0;
  mutable std::once_flag bits_once_;
  mutable std::vector<std::uint64_t> residue_bits_;
};

inline SeriesEstimate singular_series(std::uint64_t n, std::uint64_t prime_cutoff = kDefaultPrimeCutoff) {
  return EulerProduct(prime_cutoff).evaluate(n);
}

struct ConvergenceRow {
  std::uint64_t n = 0;
  std::uint64_t Q = 0;
  double sigma_nQ = 0.0;
  double euler = 0.0;
  double abs_diff = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<std::uint64_t> skipped_squares;
  std::vector<std::uint64_t> q_grid;
  std::vector<double> median_abs_diff;  // one per grid entry
  bool median_nonincreasing = true;
};

inline double median(std::vector<double> xs) {
  if (xs.empty()) return NAN;
  std::sort(xs.begin(), xs.end());
  const std::size_t h = xs.size() / 2;
  return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

/// Sigma(n, Q) against the truncated Euler product for every n and Q.
inline ConvergenceReport series_convergence_report(const std::vector<std::uint64_t>& n_samples,
                                                   const std::vector<std::uint64_t>& q_grid,
                                                   std::uint64_t prime_cutoff = kDefaultPrimeCutoff,
                                                   unsigned threads = 1) {
  if (q_grid.empty()) throw DomainError("series_convergence_report: empty Q grid");
  if (!std::is_sorted(q_grid.begin(), q_grid.end()) ||
      std::adjacent_find(q_grid.begin(), q_grid.end()) != q_grid.end())
    throw DomainError("series_convergence_report: Q grid must be strictly increasing");
  ConvergenceReport rep;
  rep.q_grid = q_grid;
  std::vector<std::uint64_t> ns;
  for (std::uint64_t n : n_samples) {
    if (n == 0) throw DomainError("series_convergence_report: n must be positive");
    (is_square(n) ? rep.skipped_squares : ns).push_back(n);
  }
  const EulerProduct euler(prime_cutoff);
  const GaussSeries gauss(q_grid.back());
  std::vector<ConvergenceRow> rows(ns.size() * q_grid.size());
  parallel_for(ns.size(), threads, [&](std::size_t i) {
    const double e = euler.evaluate(ns[i]).value;
    for (std::size_t g = 0; g < q_grid.size(); ++g) {
      const double s = gauss.value(ns[i], q_grid[g]);
      rows[i * q_grid.size() + g] = {ns[i], q_grid[g], s, e, std::abs(s - e)};
    }
  });
  rep.rows = std::move(rows);
  for (std::size_t g = 0; g < q_grid.size(); ++g) {
    std::vector<double> d;
    for (std::size_t i = 0; i < ns.size(); ++i) d.push_back(rep.rows[i * q_grid.size() + g].abs_diff);
    rep.median_abs_diff.push_back(median(std::move(d)));
    if (g > 0 && rep.median_abs_diff[g] > rep.median_abs_diff[g - 1]) rep.median_nonincreasing = false;
  }
  return rep;
}

}  // namespace psq
