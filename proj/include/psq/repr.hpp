#pragma once
// Counting representations n = p + m^2, one n at a time and in bulk, and
// enumerating the non-squares that have none.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psq/arith.hpp"
#include "psq/error.hpp"
#include "psq/parallel.hpp"

namespace psq {

struct Witness {
  std::uint64_t p = 0;
  std::uint64_t m = 0;
  bool operator==(const Witness&) const = default;
};

struct ReprRecord {
  std::uint64_t n = 0;
  std::uint32_t count = 0;  // r(n)
  double weighted = 0.0;    // sum of log p over the representations
  std::optional<std::vector<Witness>> witnesses;
};

inline void check_m_min(unsigned m_min) {
  if (m_min > 1) throw DomainError("m_min must be 0 or 1");
}

/// Every representation p + m^2 = n with m >= m_min, scanned by ascending m.
inline ReprRecord count_representations(std::uint64_t n, unsigned m_min, const PrimeTable& table,
                                        bool keep_witnesses = true) {
  check_m_min(m_min);
  if (n == 0) throw DomainError("count_representations: n must be positive");
  const std::uint64_t mm = std::uint64_t{m_min} * m_min;
  if (n > mm && n - mm > table.limit())
    throw DomainError("count_representations: prime table too small for n=" + std::to_string(n));
  ReprRecord rec;
  rec.n = n;
  if (keep_witnesses) rec.witnesses.emplace();
  for (std::uint64_t m = m_min; m * m < n; ++m) {
    const std::uint64_t p = n - m * m;
    if (!table.contains(p)) continue;
    ++rec.count;
    rec.weighted += std::log(static_cast<double>(p));
    if (keep_witnesses) rec.witnesses->push_back({p, m});
  }
  return rec;
}

/// The proof-scaffold weight R(n): only primes Q < p <= N and squares of m
/// with sqrt(N)/2 < m <= sqrt(N), i.e. 4m^2 > N and m^2 <= N.
inline double windowed_weight(std::uint64_t n, std::uint64_t N, std::uint64_t Q, const PrimeTable& table) {
  if (N > table.limit()) throw DomainError("windowed_weight: N exceeds prime table limit");
  double w = 0.0;
  const std::uint64_t m_hi = isqrt(N);
  std::uint64_t m_lo = isqrt(N / 4);
  while (4 * m_lo * m_lo <= N) ++m_lo;
  for (std::uint64_t m = m_lo; m <= m_hi && m * m < n; ++m) {
    const std::uint64_t p = n - m * m;
    if (p > Q && p <= N && table.contains(p)) w += std::log(static_cast<double>(p));
  }
  return w;
}

/// Columnar scan output for the contiguous range [lo, lo + counts.size()).
struct ScanBlock {
  std::uint64_t lo = 0;
  std::vector<std::uint32_t> counts;
  std::vector<double> weighted;

  std::size_t size() const noexcept { return counts.size(); }
  ReprRecord record(std::size_t i) const { return {lo + i, counts[i], weighted[i], std::nullopt}; }
};

inline constexpr std::uint64_t kScanSegment = std::uint64_t{1} << 20;
// Largest range a single batch call will accept.
inline constexpr std::uint64_t kMaxScanRange = std::uint64_t{1} << 36;

namespace detail {

// Dual iteration: for each m ascending, every prime p in the window gets
// p + m^2 marked. Per n, contributions therefore arrive in ascending m,
// the same order count_representations uses, so the sums are bit-identical.
inline void scan_segment(std::uint64_t lo, std::uint64_t hi, unsigned m_min, const PrimeTable& table,
                         ScanBlock& out) {
  out.lo = lo;
  out.counts.assign(hi - lo + 1, 0);
  out.weighted.assign(hi - lo + 1, 0.0);
  for (std::uint64_t m = m_min; m * m + 2 <= hi; ++m) {
    const std::uint64_t sq = m * m;
    const std::uint64_t p_lo = lo > sq ? lo - sq : 0;
    const std::uint64_t p_hi = hi - sq;
    table.for_each_prime(p_lo, p_hi, [&](std::uint64_t p) {
      const std::size_t i = static_cast<std::size_t>(p + sq - lo);
      ++out.counts[i];
      out.weighted[i] += std::log(static_cast<double>(p));
    });
  }
}

}  // namespace detail

/// Scans [lo, hi] in segments and hands each finished block to sink in
/// ascending order. Workers process one wave of segments at a time.
inline void batch_scan_segments(std::uint64_t lo, std::uint64_t hi, unsigned m_min, const PrimeTable& table,
                                unsigned threads, const std::function<void(const ScanBlock&)>& sink) {
  check_m_min(m_min);
  if (lo == 0) lo = 1;
  if (lo > hi) return;
  if (hi - lo >= kMaxScanRange) throw ResourceError("batch_scan: range too large");
  const std::uint64_t mm = std::uint64_t{m_min} * m_min;
  if (hi > mm && hi - mm > table.limit())
    throw DomainError("batch_scan: prime table too small for n=" + std::to_string(hi));
  const std::uint64_t segments = (hi - lo) / kScanSegment + 1;
  const std::size_t wave = resolve_threads(threads);
  std::vector<ScanBlock> blocks(wave);
  for (std::uint64_t s0 = 0; s0 < segments; s0 += wave) {
    const std::size_t in_wave = static_cast<std::size_t>(std::min<std::uint64_t>(wave, segments - s0));
    parallel_for(in_wave, threads, [&](std::size_t k) {
      const std::uint64_t seg_lo = lo + (s0 + k) * kScanSegment;
      const std::uint64_t seg_hi = std::min(hi, seg_lo + kScanSegment - 1);
      detail::scan_segment(seg_lo, seg_hi, m_min, table, blocks[k]);
    });
    for (std::size_t k = 0; k < in_wave; ++k) sink(blocks[k]);
  }
}

/// Whole range in one block. Witnesses are not kept in batch mode.
inline ScanBlock batch_scan(std::uint64_t lo, std::uint64_t hi, unsigned m_min, const PrimeTable& table,
                            unsigned threads = 1) {
  ScanBlock all;
  if (lo == 0) lo = 1;
  all.lo = lo;
  if (lo > hi) return all;
  all.counts.reserve(hi - lo + 1);
  all.weighted.reserve(hi - lo + 1);
  batch_scan_segments(lo, hi, m_min, table, threads, [&](const ScanBlock& b) {
    all.counts.insert(all.counts.end(), b.counts.begin(), b.counts.end());
    all.weighted.insert(all.weighted.end(), b.weighted.begin(), b.weighted.end());
  });
  return all;
}

/// Closed form for sum_{n <= N} r(n): each pair (m, p) with p <= N - m^2.
inline std::uint64_t double_count_total(std::uint64_t N, unsigned m_min, const PrimeTable& table) {
  check_m_min(m_min);
  std::uint64_t total = 0;
  for (std::uint64_t m = m_min; m * m < N; ++m) total += table.count_up_to(N - m * m);
  return total;
}

struct ExceptionReport {
  std::uint64_t limit = 0;
  unsigned m_min = 1;
  std::vector<std::uint64_t> members;  // ascending
  std::uint64_t count = 0;
  std::uint64_t squares_excluded = 0;
};

/// Non-squares n <= N with no representation under the given m-convention.
inline ExceptionReport exceptional_scan(std::uint64_t N, unsigned m_min, const PrimeTable& table,
                                        unsigned threads = 1) {
  if (N == 0) throw DomainError("exceptional_scan: N must be positive");
  ExceptionReport rep;
  rep.limit = N;
  rep.m_min = m_min;
  rep.squares_excluded = isqrt(N);
  batch_scan_segments(1, N, m_min, table, threads, [&](const ScanBlock& b) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::uint64_t n = b.lo + i;
      if (b.counts[i] == 0 && !is_square(n)) rep.members.push_back(n);
    }
  });
  rep.count = rep.members.size();
  return rep;
}

}  // namespace psq
