#pragma once
// Experiment configuration and its flat key=value file format.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "psq/arith.hpp"
#include "psq/bounds.hpp"
#include "psq/error.hpp"

namespace psq {

enum class OutputFormat { csv, json, binary };

inline const char* to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
    case OutputFormat::binary: return "binary";
  }
  return "csv";
}

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  if (s == "binary") return OutputFormat::binary;
  throw DomainError("unknown format '" + s + "' (expected csv, json or binary)");
}

/// Accepts plain decimal, 10^k style powers (b^k) and 1e6 style exponents.
inline std::uint64_t parse_count(const std::string& s) {
  auto whole = [&](std::string_view v) {
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
      throw DomainError("not a nonnegative integer: '" + s + "'");
    return x;
  };
  auto power = [&](std::uint64_t base, std::uint64_t exp) {
    std::uint64_t r = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
      if (base != 0 && r > ~std::uint64_t{0} / base) throw DomainError("integer overflow in '" + s + "'");
      r *= base;
    }
    return r;
  };
  if (auto caret = s.find('^'); caret != std::string::npos)
    return power(whole(std::string_view(s).substr(0, caret)), whole(std::string_view(s).substr(caret + 1)));
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    const std::uint64_t mant = whole(std::string_view(s).substr(0, e));
    const std::uint64_t p = power(10, whole(std::string_view(s).substr(e + 1)));
    if (mant != 0 && p > ~std::uint64_t{0} / mant) throw DomainError("integer overflow in '" + s + "'");
    return mant * p;
  }
  return whole(s);
}

inline double parse_real(const std::string& s) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DomainError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw DomainError("not a number: '" + s + "'");
  return x;
}

inline std::vector<std::uint64_t> parse_count_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(parse_count(item));
  return out;
}

inline std::string join_counts(const std::vector<std::uint64_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

/// Shortest text that reads back to the same double.
inline std::string exact_real(double x) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::stod(buf) == x) break;
  }
  return buf;
}

struct ScanConfig {
  std::uint64_t limit = 1000000;
  unsigned m_min = 1;
  std::uint64_t prime_cutoff = 100000;
  std::vector<std::uint64_t> q_grid{50, 200, 1000};
  BoundConstants constants;  // u and the O-constants
  std::string output = "-";
  OutputFormat format = OutputFormat::csv;
  unsigned threads = 0;
  std::string cache_path;  // empty: no cache
  std::uint64_t samples = 0;  // 0: the command's own default
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> n_values;
  std::uint64_t circle_limit = 2000;
  std::uint64_t gauss_max_q = 999;
  std::uint64_t parseval_q = 100;

  bool operator==(const ScanConfig&) const = default;

  /// Throws DomainError naming the first offending field.
  void validate() const {
    if (limit < 2) throw DomainError("limit must be at least 2");
    if (limit > PrimeTable::kMaxLimit) throw DomainError("limit must not exceed 2^40");
    if (m_min > 1) throw DomainError("m_min must be 0 or 1");
    if (prime_cutoff < 3) throw DomainError("prime_cutoff must be at least 3");
    if (q_grid.empty()) throw DomainError("q_grid must not be empty");
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
      if (q_grid[i] == 0) throw DomainError("q_grid entries must be positive");
      if (i && q_grid[i] <= q_grid[i - 1]) throw DomainError("q_grid must be strictly increasing");
    }
    if (!(constants.u >= 1.0)) throw DomainError("u must be at least 1");
    if (circle_limit < 16) throw DomainError("circle_limit must be at least 16");
    if (gauss_max_q < 1) throw DomainError("gauss_max_q must be positive");
    for (std::uint64_t n : n_values)
      if (n == 0) throw DomainError("n_values entries must be positive");
  }

  std::string to_text() const {
    std::string s;
    auto put = [&](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
    put("limit", std::to_string(limit));
    put("m_min", std::to_string(m_min));
    put("prime_cutoff", std::to_string(prime_cutoff));
    put("q_grid", join_counts(q_grid));
    put("u", exact_real(constants.u));
    put("selberg_c", exact_real(constants.selberg_C));
    put("comb_c1", exact_real(constants.comb_C1));
    put("comb_c2", exact_real(constants.comb_C2));
    put("out", output);
    put("format", to_string(format));
    put("threads", std::to_string(threads));
    put("cache", cache_path);
    put("samples", std::to_string(samples));
    put("seed", std::to_string(seed));
    put("n_values", join_counts(n_values));
    put("circle_limit", std::to_string(circle_limit));
    put("gauss_max_q", std::to_string(gauss_max_q));
    put("parseval_q", std::to_string(parseval_q));
    return s;
  }

  /// Applies one key; unknown keys are an error.
  void set(const std::string& key, const std::string& value) {
    auto small = [&](const std::string& v) {
      const std::uint64_t x = parse_count(v);
      if (x > 0xFFFFFFFFull) throw DomainError(key + " out of range");
      return static_cast<unsigned>(x);
    };
    if (key == "limit") limit = parse_count(value);
    else if (key == "m_min") m_min = small(value);
    else if (key == "prime_cutoff") prime_cutoff = parse_count(value);
    else if (key == "q_grid") q_grid = parse_count_list(value);
    else if (key == "u") constants.u = parse_real(value);
    else if (key == "selberg_c") constants.selberg_C = parse_real(value);
    else if (key == "comb_c1") constants.comb_C1 = parse_real(value);
    else if (key == "comb_c2") constants.comb_C2 = parse_real(value);
    else if (key == "out") output = value;
    else if (key == "format") format = parse_format(value);
    else if (key == "threads") threads = small(value);
    else if (key == "cache") cache_path = value;
    else if (key == "samples") samples = parse_count(value);
    else if (key == "seed") seed = parse_count(value);
    else if (key == "n_values") n_values = parse_count_list(value);
    else if (key == "circle_limit") circle_limit = parse_count(value);
    else if (key == "gauss_max_q") gauss_max_q = parse_count(value);
    else if (key == "parseval_q") parseval_q = parse_count(value);
    else throw DomainError("unknown config key '" + key + "'");
  }

  /// Lines of key=value; blank lines and lines starting with # are ignored.
  void apply_text(const std::string& text) {
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto trim = [](std::string x) {
        const auto b = x.find_first_not_of(" \t\r");
        const auto e = x.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw DomainError("config line " + std::to_string(lineno) + ": expected key=value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  static ScanConfig from_text(const std::string& text) {
    ScanConfig c;
    c.apply_text(text);
    return c;
  }

  void apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    apply_text(buf.str());
  }
};

}  // namespace psq
