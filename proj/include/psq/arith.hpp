#pragma once
// Exact integer arithmetic: the odd-only prime bitset, quadratic symbols,
// multiplicative functions and exact square roots.

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psq/error.hpp"

namespace psq {

struct SquareRoot {
  std::uint64_t floor_sqrt = 0;
  bool is_square = false;
};

/// Exact floor square root; the float estimate is only a starting point.
inline SquareRoot isqrt_and_square_test(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  // r*r may exceed 2^64 only if r > 2^32 - 1.
  constexpr std::uint64_t kMaxRoot = 0xFFFFFFFFull;
  if (r > kMaxRoot) r = kMaxRoot;
  while (r * r > n) --r;
  while (r < kMaxRoot && (r + 1) * (r + 1) <= n) ++r;
  return {r, r * r == n};
}

inline std::uint64_t isqrt(std::uint64_t n) { return isqrt_and_square_test(n).floor_sqrt; }
inline bool is_square(std::uint64_t n) { return isqrt_and_square_test(n).is_square; }

/// Jacobi symbol (a/m) for odd m >= 1. (a/1) = 1 for every a, including 0.
inline int jacobi(std::int64_t a, std::int64_t m) {
  if (m <= 0 || (m & 1) == 0) throw DomainError("jacobi: modulus must be odd and positive");
  std::int64_t r = a % m;
  if (r < 0) r += m;
  auto x = static_cast<std::uint64_t>(r);
  auto n = static_cast<std::uint64_t>(m);
  int t = 1;
  while (x != 0) {
    const int twos = std::countr_zero(x);
    x >>= twos;
    if ((twos & 1) && (n % 8 == 3 || n % 8 == 5)) t = -t;
    std::swap(x, n);
    if (x % 4 == 3 && n % 4 == 3) t = -t;
    x %= n;
  }
  return n == 1 ? t : 0;
}

struct Factorization {
  std::uint64_t value = 1;
  std::vector<std::pair<std::uint64_t, unsigned>> pairs;  // (prime, exponent), primes ascending

  bool squarefree() const {
    return std::all_of(pairs.begin(), pairs.end(), [](const auto& pe) { return pe.second == 1; });
  }
};

/// Trial division. Fine for the moduli q <= Q this library works with.
inline Factorization factorize(std::uint64_t n) {
  if (n == 0) throw DomainError("factorize: n must be positive");
  Factorization f;
  f.value = n;
  auto take = [&](std::uint64_t p) {
    unsigned e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    if (e) f.pairs.emplace_back(p, e);
  };
  take(2);
  take(3);
  for (std::uint64_t p = 5; p * p <= n; p += 6) {
    take(p);
    take(p + 2);
  }
  if (n > 1) f.pairs.emplace_back(n, 1u);
  return f;
}

inline int mobius(const Factorization& f) {
  if (!f.squarefree()) return 0;
  return (f.pairs.size() % 2 == 0) ? 1 : -1;
}

inline int mobius(std::uint64_t n) {
  if (n == 0) throw DomainError("mobius: n must be positive");
  return mobius(factorize(n));
}

inline std::uint64_t totient(const Factorization& f) {
  std::uint64_t phi = f.value;
  for (const auto& [p, e] : f.pairs) phi = phi / p * (p - 1);
  return phi;
}

inline std::uint64_t totient(std::uint64_t n) {
  if (n == 0) throw DomainError("totient: n must be positive");
  return totient(factorize(n));
}

/// Primality by trial division; used where no sieve is at hand.
inline bool is_prime_trial(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  if (n % 3 == 0) return n == 3;
  for (std::uint64_t p = 5; p * p <= n; p += 6)
    if (n % p == 0 || n % (p + 2) == 0) return false;
  return true;
}

/// Bit-packed sieve of Eratosthenes over the odd numbers in [1, limit].
///
/// Bit i of the table stands for the odd number 2i+1 and is set when that
/// number is not prime. Padding bits after the last odd number are set as
/// well, so a cleared bit always means "prime". Immutable after construction.
class PrimeTable {
 public:
  static constexpr std::uint64_t kMaxLimit = std::uint64_t{1} << 40;
  static constexpr std::size_t kDefaultSegmentBytes = std::size_t{1} << 18;
  static constexpr char kMagic[4] = {'P', 'S', 'Q', '1'};

  explicit PrimeTable(std::uint64_t limit, std::size_t segment_bytes = kDefaultSegmentBytes)
      : limit_(limit) {
    if (limit < 2) throw DomainError("PrimeTable: limit must be at least 2");
    if (limit > kMaxLimit) throw ResourceError("PrimeTable: limit exceeds 2^40");
    if (segment_bytes < 8) segment_bytes = 8;
    segment_bytes -= segment_bytes % 8;
    try {
      words_.assign(word_count(limit), 0);
    } catch (const std::bad_alloc&) {
      throw ResourceError("PrimeTable: cannot allocate bitset for limit " + std::to_string(limit));
    }
    sieve(segment_bytes / 8);
  }

  std::uint64_t limit() const noexcept { return limit_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// Number of odd values 1, 3, ..., covered by bits.
  static std::uint64_t odd_count(std::uint64_t limit) noexcept { return (limit + 1) / 2; }
  static std::size_t word_count(std::uint64_t limit) noexcept {
    return static_cast<std::size_t>((odd_count(limit) + 63) / 64);
  }

  bool is_prime(std::uint64_t n) const {
    if (n > limit_) throw DomainError("PrimeTable: " + std::to_string(n) + " exceeds limit " + std::to_string(limit_));
    return contains(n);
  }

  /// Membership without the range check; n must be <= limit().
  bool contains(std::uint64_t n) const noexcept {
    assert(n <= limit_);
    if ((n & 1) == 0) return n == 2;
    const std::uint64_t i = n >> 1;
    return ((words_[i >> 6] >> (i & 63)) & 1) == 0;
  }

  /// Calls f(p) for every prime lo <= p <= hi, ascending. hi is clamped to limit().
  template <class F>
  void for_each_prime(std::uint64_t lo, std::uint64_t hi, F&& f) const {
    hi = std::min(hi, limit_);
    if (lo > hi) return;
    if (lo <= 2 && 2 <= hi) f(std::uint64_t{2});
    if (hi < 3) return;
    lo = std::max<std::uint64_t>(lo, 3);
    const std::uint64_t i0 = lo >> 1;        // smallest odd >= lo is 2*i0+1
    const std::uint64_t i1 = (hi - 1) >> 1;  // largest odd <= hi is 2*i1+1
    if (i0 > i1) return;
    std::size_t w = static_cast<std::size_t>(i0 >> 6);
    const std::size_t wlast = static_cast<std::size_t>(i1 >> 6);
    std::uint64_t bits = ~words_[w] & (~std::uint64_t{0} << (i0 & 63));
    for (;;) {
      if (w == wlast) {
        const unsigned top = static_cast<unsigned>(i1 & 63);
        if (top != 63) bits &= (std::uint64_t{1} << (top + 1)) - 1;
      }
      while (bits) {
        const std::uint64_t i = (std::uint64_t{w} << 6) | static_cast<unsigned>(std::countr_zero(bits));
        f(2 * i + 1);
        bits &= bits - 1;
      }
      if (w == wlast) break;
      bits = ~words_[++w];
    }
  }

  std::vector<std::uint64_t> primes(std::uint64_t lo, std::uint64_t hi) const {
    std::vector<std::uint64_t> out;
    for_each_prime(lo, hi, [&](std::uint64_t p) { out.push_back(p); });
    return out;
  }
  std::vector<std::uint64_t> primes() const { return primes(2, limit_); }

  /// pi(x), the number of primes <= x, for x <= limit().
  std::uint64_t count_up_to(std::uint64_t x) const {
    if (x > limit_) throw DomainError("PrimeTable: count_up_to beyond limit");
    if (x < 2) return 0;
    if (x < 3) return 1;
    const std::uint64_t i1 = (x - 1) >> 1;
    const std::size_t wlast = static_cast<std::size_t>(i1 >> 6);
    std::uint64_t c = 1;  // the prime 2
    for (std::size_t w = 0; w < wlast; ++w) c += static_cast<unsigned>(std::popcount(~words_[w]));
    std::uint64_t bits = ~words_[wlast];
    const unsigned top = static_cast<unsigned>(i1 & 63);
    if (top != 63) bits &= (std::uint64_t{1} << (top + 1)) - 1;
    return c + static_cast<unsigned>(std::popcount(bits));
  }

  /// Forward iteration over all primes <= limit().
  class const_iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = std::uint64_t;
    using difference_type = std::ptrdiff_t;
    using pointer = const std::uint64_t*;
    using reference = std::uint64_t;

    const_iterator() = default;
    std::uint64_t operator*() const noexcept { return current_; }
    const_iterator& operator++() {
      advance();
      return *this;
    }
    const_iterator operator++(int) {
      auto tmp = *this;
      advance();
      return tmp;
    }
    bool operator==(const const_iterator& o) const noexcept { return current_ == o.current_; }

   private:
    friend class PrimeTable;
    const_iterator(const PrimeTable* t, std::uint64_t start) : table_(t), current_(start) {}
    void advance() {
      std::uint64_t n = current_ == 2 ? 3 : current_ + 2;
      while (n <= table_->limit_ && !table_->contains(n)) n += 2;
      current_ = n <= table_->limit_ ? n : kEnd;
    }
    static constexpr std::uint64_t kEnd = ~std::uint64_t{0};
    const PrimeTable* table_ = nullptr;
    std::uint64_t current_ = kEnd;
  };

  const_iterator begin() const { return const_iterator(this, 2); }
  const_iterator end() const { return const_iterator(this, const_iterator::kEnd); }

  bool operator==(const PrimeTable& o) const { return limit_ == o.limit_ && words_ == o.words_; }

  // Cache file: "PSQ1", u64 limit (little-endian), then 8 * word_count(limit)
  // bytes of bitset, each 64-bit word little-endian.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError("cannot open cache for writing: " + path.string());
    out.write(kMagic, 4);
    write_le(out, limit_);
    for (std::uint64_t w : words_) write_le(out, w);
    if (!out) throw CacheError("failed writing cache: " + path.string());
  }

  /// Loads a cache file. Validates magic, size, and padding bits; when
  /// expected_limit is nonzero the stored limit must equal it.
  static PrimeTable load(const std::filesystem::path& path, std::uint64_t expected_limit = 0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CacheError("cannot open cache: " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw CacheError("bad cache magic in " + path.string());
    std::uint64_t limit = 0;
    if (!read_le(in, limit)) throw CacheError("truncated cache header in " + path.string());
    if (limit < 2 || limit > kMaxLimit) throw CacheError("cache limit out of range in " + path.string());
    if (expected_limit != 0 && limit != expected_limit)
      throw CacheError("cache limit " + std::to_string(limit) + " does not match " + std::to_string(expected_limit));
    std::vector<std::uint64_t> words(word_count(limit));
    for (auto& w : words)
      if (!read_le(in, w)) throw CacheError("truncated cache bitset in " + path.string());
    if (in.peek() != std::char_traits<char>::eof()) throw CacheError("trailing bytes in cache " + path.string());
    PrimeTable t(limit, std::move(words));
    if (!t.structurally_valid()) throw CacheError("cache bitset failed validation: " + path.string());
    return t;
  }

  /// Reads the cache if it holds exactly `limit`; otherwise sieves and
  /// rewrites it. A malformed file still raises CacheError.
  static PrimeTable load_or_build(const std::filesystem::path& path, std::uint64_t limit, bool* rebuilt = nullptr) {
    if (std::filesystem::exists(path)) {
      std::uint64_t stored = peek_limit(path);
      if (stored == limit) {
        if (rebuilt) *rebuilt = false;
        return load(path, limit);
      }
    }
    PrimeTable t(limit);
    t.save(path);
    if (rebuilt) *rebuilt = true;
    return t;
  }

  /// Limit recorded in a cache header, after checking the magic.
  static std::uint64_t peek_limit(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw CacheError("bad cache magic in " + path.string());
    std::uint64_t limit = 0;
    if (!read_le(in, limit)) throw CacheError("truncated cache header in " + path.string());
    return limit;
  }

 private:
  PrimeTable(std::uint64_t limit, std::vector<std::uint64_t> words) : limit_(limit), words_(std::move(words)) {}

  // Cheap checks that catch most corruption: 1 is marked, padding is marked,
  // small odd numbers agree with trial division.
  bool structurally_valid() const {
    if ((words_[0] & 1) == 0) return false;
    const std::uint64_t used = odd_count(limit_) % 64;
    if (used != 0 && (words_.back() >> used) != (~std::uint64_t{0} >> used)) return false;
    const std::uint64_t probe = std::min<std::uint64_t>(limit_, 4096);
    for (std::uint64_t n = 3; n <= probe; n += 2)
      if (contains(n) != is_prime_trial(n)) return false;
    return true;
  }

  void sieve(std::size_t segment_words) {
    words_[0] |= 1;  // 1 is not prime
    const std::uint64_t used = odd_count(limit_) % 64;
    if (used != 0) words_.back() |= ~std::uint64_t{0} << used;

    const std::uint64_t root = isqrt(limit_);
    // Odd base primes up to sqrt(limit) by a plain byte sieve.
    std::vector<std::uint8_t> small(root + 1, 1);
    std::vector<std::uint64_t> base;
    for (std::uint64_t p = 3; p <= root; p += 2) {
      if (!small[p]) continue;
      base.push_back(p);
      for (std::uint64_t k = p * p; k <= root; k += 2 * p) small[k] = 0;
    }
    // next[j]: odd-bit index of the next multiple of base[j] to strike.
    std::vector<std::uint64_t> next(base.size());
    for (std::size_t j = 0; j < base.size(); ++j) next[j] = (base[j] * base[j]) >> 1;

    const std::uint64_t total_bits = odd_count(limit_);
    const std::uint64_t seg_bits = std::uint64_t{segment_words} * 64;
    for (std::uint64_t seg_lo = 0; seg_lo < total_bits; seg_lo += seg_bits) {
      const std::uint64_t seg_hi = std::min(total_bits, seg_lo + seg_bits);
      for (std::size_t j = 0; j < base.size(); ++j) {
        const std::uint64_t p = base[j];
        std::uint64_t i = next[j];
        for (; i < seg_hi; i += p) words_[i >> 6] |= std::uint64_t{1} << (i & 63);
        next[j] = i;
      }
    }
  }

  static void write_le(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out.write(b, 8);
  }
  static bool read_le(std::istream& in, std::uint64_t& v) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) return false;
    v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t{b[k]} << (8 * k);
    return true;
  }

  std::uint64_t limit_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace psq
