#pragma once
// Conjectured main term, the Selberg and combinatorial sieve upper bounds,
// and the normalized ratio r(n) log n / (P(n) sqrt n) with its statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "psq/arith.hpp"
#include "psq/error.hpp"
#include "psq/parallel.hpp"
#include "psq/repr.hpp"
#include "psq/singular.hpp"

namespace psq {

/// The O-constants of the sieve bounds are not known; they are inputs.
struct BoundConstants {
  double selberg_C = 1.0;
  double comb_C1 = 1.0;
  double comb_C2 = 1.0;
  double u = 3.0;
  bool operator==(const BoundConstants&) const = default;
};

namespace detail {
inline void require_usable_series(std::uint64_t n, const SeriesEstimate& s, const char* who) {
  if (s.n != n) throw DomainError(std::string(who) + ": series was computed for a different n");
  if (s.square_input) throw DomainError(std::string(who) + ": undefined for square n=" + std::to_string(n));
  if (!(s.value > 0.0)) throw DomainError(std::string(who) + ": series value must be positive");
}
}  // namespace detail

/// P(n) sqrt(n) / log n.
inline double hl_prediction(std::uint64_t n, const SeriesEstimate& series) {
  if (n < 2) throw DomainError("hl_prediction: n must be at least 2");
  detail::require_usable_series(n, series, "hl_prediction");
  const double x = static_cast<double>(n);
  return series.value * std::sqrt(x) / std::log(x);
}

/// 2 P(n) N/log N (1 + C log log 3N / log N).
inline double selberg_bound_rhs(std::uint64_t n, std::uint64_t N, const SeriesEstimate& series, double C = 1.0) {
  if (n > N) throw DomainError("selberg_bound_rhs: need n <= N");
  if (N < 2) throw DomainError("selberg_bound_rhs: N must be at least 2");
  detail::require_usable_series(n, series, "selberg_bound_rhs");
  const double x = static_cast<double>(N);
  const double L = std::log(x);
  return 2.0 * series.value * x / L * (1.0 + C * std::log(std::log(3.0 * x)) / L);
}

/// u e^{-gamma} P(n) N/log N (1 + C1 exp(-u(log u - log log 3u - 2)) + C2 u/log N),
/// valid for u >= 1 and N^{1/u} >= 2.
inline double combinatorial_bound_rhs(std::uint64_t n, std::uint64_t N, double u, const SeriesEstimate& series,
                                      double C1 = 1.0, double C2 = 1.0) {
  if (!(u >= 1.0)) throw DomainError("combinatorial_bound_rhs: u must be at least 1");
  if (N < 2 || std::log(static_cast<double>(N)) / u < std::numbers::ln2)
    throw DomainError("combinatorial_bound_rhs: need N^(1/u) >= 2");
  if (n > N) throw DomainError("combinatorial_bound_rhs: need n <= N");
  detail::require_usable_series(n, series, "combinatorial_bound_rhs");
  const double x = static_cast<double>(N);
  const double L = std::log(x);
  const double sieve_err = std::exp(-u * (std::log(u) - std::log(std::log(3.0 * u)) - 2.0));
  return u * std::exp(-std::numbers::egamma) * series.value * x / L * (1.0 + C1 * sieve_err + C2 * u / L);
}

/// r(n) log n / (P(n) sqrt n); tends to 1 under the conjecture.
inline double miech_ratio(std::uint64_t n, std::uint32_t count, const SeriesEstimate& series) {
  if (n < 2) throw DomainError("miech_ratio: n must be at least 2");
  detail::require_usable_series(n, series, "miech_ratio");
  const double x = static_cast<double>(n);
  return static_cast<double>(count) * std::log(x) / (series.value * std::sqrt(x));
}

/// Linear-interpolation percentile of sorted data, q in [0, 1].
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return NAN;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, sorted.size() - 1);
  return sorted[i] + (pos - static_cast<double>(i)) * (sorted[j] - sorted[i]);
}

inline constexpr double kSmallSeries = 0.05;

struct MiechSummary {
  std::uint64_t N = 0;
  unsigned m_min = 1;
  std::uint64_t series_cutoff = 0;
  std::size_t used = 0;
  double median = NAN, p5 = NAN, p25 = NAN, p75 = NAN, p95 = NAN;
  double iqr() const { return p75 - p25; }
  double within_25 = NAN;  // fraction with |ratio - 1| <= 0.25
  double within_50 = NAN;
  std::vector<std::uint64_t> small_series;  // P(n) < 0.05, kept out of the statistics
  std::vector<std::uint64_t> skipped_squares;
};

/// Ratio statistics over a sample of n in (N/2, N].
inline MiechSummary miech_ratio_stats(std::uint64_t N, const std::vector<std::uint64_t>& sample,
                                      const EulerProduct& euler, const PrimeTable& table, unsigned m_min = 1,
                                      unsigned threads = 1) {
  MiechSummary s;
  s.N = N;
  s.m_min = m_min;
  s.series_cutoff = euler.cutoff();
  std::vector<std::uint64_t> ns;
  for (std::uint64_t n : sample) {
    if (n <= N / 2 || n > N) throw DomainError("miech_ratio_stats: sample must lie in (N/2, N]");
    (is_square(n) ? s.skipped_squares : ns).push_back(n);
  }
  std::vector<double> ratio(ns.size(), NAN);
  std::vector<char> small(ns.size(), 0);
  parallel_for(ns.size(), threads, [&](std::size_t i) {
    const SeriesEstimate e = euler.evaluate(ns[i]);
    if (e.value < kSmallSeries) {
      small[i] = 1;
      return;
    }
    const ReprRecord rec = count_representations(ns[i], m_min, table, false);
    ratio[i] = miech_ratio(ns[i], rec.count, e);
  });
  std::vector<double> sorted;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (small[i])
      s.small_series.push_back(ns[i]);
    else
      sorted.push_back(ratio[i]);
  }
  std::sort(sorted.begin(), sorted.end());
  s.used = sorted.size();
  if (sorted.empty()) return s;
  s.median = percentile_sorted(sorted, 0.5);
  s.p5 = percentile_sorted(sorted, 0.05);
  s.p25 = percentile_sorted(sorted, 0.25);
  s.p75 = percentile_sorted(sorted, 0.75);
  s.p95 = percentile_sorted(sorted, 0.95);
  auto frac = [&](double t) {
    const auto c = std::count_if(sorted.begin(), sorted.end(), [&](double r) { return std::abs(r - 1.0) <= t; });
    return static_cast<double>(c) / static_cast<double>(sorted.size());
  };
  s.within_25 = frac(0.25);
  s.within_50 = frac(0.5);
  return s;
}

/// Distinct non-square integers drawn uniformly from [lo, hi], in draw order.
/// Deterministic for a given seed on a given standard library.
inline std::vector<std::uint64_t> sample_nonsquares(std::uint64_t lo, std::uint64_t hi, std::size_t count,
                                                    std::uint64_t seed) {
  if (lo == 0 || lo > hi) throw DomainError("sample_nonsquares: need 1 <= lo <= hi");
  const std::uint64_t available = hi - lo + 1 - (isqrt(hi) - isqrt(lo - 1));
  if (count > available) throw DomainError("sample_nonsquares: not enough non-squares in range");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> dist(lo, hi);
  std::vector<std::uint64_t> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::uint64_t n = dist(rng);
    if (is_square(n)) continue;
    if (std::find(out.begin(), out.end(), n) != out.end()) continue;
    out.push_back(n);
  }
  return out;
}

struct BoundCheckRow {
  std::uint64_t n = 0;
  double measured_weighted = 0.0;
  std::uint32_t count = 0;
  double series = 0.0;
  double hl_prediction = 0.0;
  double miech_ratio = 0.0;
  double selberg_rhs = 0.0;
  double comb_rhs = 0.0;
  double margin_selberg() const { return measured_weighted / selberg_rhs; }
  double margin_comb() const { return measured_weighted / comb_rhs; }
};

struct BoundScan {
  std::uint64_t N = 0;
  unsigned m_min = 1;
  BoundConstants constants;
  std::uint64_t series_cutoff = 0;
  std::vector<BoundCheckRow> rows;  // every non-square n in [2, N]
  std::uint64_t selberg_violations = 0;
  std::uint64_t comb_violations = 0;
  double max_margin_selberg = 0.0;
  double max_margin_comb = 0.0;
};

/// Measured weighted sums against both sieve bounds for every non-square n <= N.
inline BoundScan bound_check_scan(std::uint64_t N, unsigned m_min, const BoundConstants& k, const EulerProduct& euler,
                                  const PrimeTable& table, unsigned threads = 1) {
  if (N < 2) throw DomainError("bound_check_scan: N must be at least 2");
  BoundScan out;
  out.N = N;
  out.m_min = m_min;
  out.constants = k;
  out.series_cutoff = euler.cutoff();
  const ScanBlock scan = batch_scan(2, N, m_min, table, threads);
  const std::vector<SeriesEstimate> series = euler.evaluate_range(2, N, threads);
  out.rows.reserve(N);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const std::uint64_t n = scan.lo + i;
    const SeriesEstimate& e = series[i];
    if (e.square_input) continue;
    BoundCheckRow row;
    row.n = n;
    row.measured_weighted = scan.weighted[i];
    row.count = scan.counts[i];
    row.series = e.value;
    row.hl_prediction = hl_prediction(n, e);
    row.miech_ratio = miech_ratio(n, row.count, e);
    row.selberg_rhs = selberg_bound_rhs(n, N, e, k.selberg_C);
    row.comb_rhs = combinatorial_bound_rhs(n, N, k.u, e, k.comb_C1, k.comb_C2);
    if (row.measured_weighted > row.selberg_rhs) ++out.selberg_violations;
    if (row.measured_weighted > row.comb_rhs) ++out.comb_violations;
    out.max_margin_selberg = std::max(out.max_margin_selberg, row.margin_selberg());
    out.max_margin_comb = std::max(out.max_margin_comb, row.margin_comb());
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace psq
