#pragma once
// Subcommands scan, exceptions, series, verify and bounds.
//
// Exit codes: 0 success, 2 usage or config error, 3 resource error,
// 4 verification failure (including a corrupt sieve cache).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psq/arith.hpp"
#include "psq/bounds.hpp"
#include "psq/config.hpp"
#include "psq/error.hpp"
#include "psq/expsums.hpp"
#include "psq/repr.hpp"
#include "psq/singular.hpp"

namespace psq::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kResource = 3, kVerifyFailed = 4 };

/// Floating output in every text format: 12 significant digits.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// A double rounded to 12 significant digits, so nlohmann::json prints it
/// with at most that many.
inline double round12(double x) { return std::isfinite(x) ? std::stod(fmt(x)) : x; }

inline nlohmann::json json_number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round12(x);
}

/// Data sink: the given stream for "-", otherwise the named file.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw DomainError("cannot open output file " + path);
      os_ = file_.get();
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

struct TableSource {
  PrimeTable table;
  bool from_cache = false;
};

inline TableSource make_table(const ScanConfig& cfg, std::uint64_t limit, std::ostream& log) {
  limit = std::max<std::uint64_t>(limit, 2);
  if (cfg.cache_path.empty()) return {PrimeTable(limit), false};
  bool rebuilt = false;
  PrimeTable t = PrimeTable::load_or_build(cfg.cache_path, limit, &rebuilt);
  log << (rebuilt ? "sieve cache written: " : "sieve cache loaded: ") << cfg.cache_path << "\n";
  return {std::move(t), !rebuilt};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void print_constants(const ScanConfig& cfg, std::ostream& log) {
  log << "constants: selberg_C=" << fmt(cfg.constants.selberg_C) << " comb_C1=" << fmt(cfg.constants.comb_C1)
      << " comb_C2=" << fmt(cfg.constants.comb_C2) << " u=" << fmt(cfg.constants.u) << "\n";
}

inline void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  char b[8];
  for (int k = 0; k < bytes; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
  os.write(b, bytes);
}

inline int cmd_scan(const ScanConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const TableSource src = make_table(cfg, cfg.limit, log);
  Output sink(cfg.output, out);
  std::ostream& os = sink.stream();
  std::uint64_t total = 0, zero = 0;
  bool first = true;
  if (cfg.format == OutputFormat::csv) os << "n,count,weighted\n";
  if (cfg.format == OutputFormat::json)
    os << "{\"limit\":" << cfg.limit << ",\"m_min\":" << cfg.m_min << ",\"records\":[";
  batch_scan_segments(1, cfg.limit, cfg.m_min, src.table, cfg.threads, [&](const ScanBlock& b) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::uint64_t n = b.lo + i;
      total += b.counts[i];
      zero += b.counts[i] == 0;
      switch (cfg.format) {
        case OutputFormat::csv:
          os << n << ',' << b.counts[i] << ',' << fmt(b.weighted[i]) << '\n';
          break;
        case OutputFormat::json:
          os << (first ? "" : ",") << "{\"n\":" << n << ",\"count\":" << b.counts[i]
             << ",\"weighted\":" << fmt(b.weighted[i]) << '}';
          break;
        case OutputFormat::binary: {
          put_le(os, n, 8);
          put_le(os, b.counts[i], 4);
          std::uint64_t bits;
          std::memcpy(&bits, &b.weighted[i], 8);
          put_le(os, bits, 8);
          break;
        }
      }
      first = false;
    }
  });
  if (cfg.format == OutputFormat::json) os << "]}\n";
  os.flush();
  log << "scan: limit=" << cfg.limit << " m_min=" << cfg.m_min << " total_representations=" << total
      << " zero_count=" << zero << " wall_s=" << fmt(seconds_since(t0)) << "\n";
  return kOk;
}

inline nlohmann::json exceptions_json(const ExceptionReport& rep) {
  nlohmann::json j;
  j["limit"] = rep.limit;
  j["m_min"] = rep.m_min;
  j["count"] = rep.count;
  j["squares_excluded"] = rep.squares_excluded;
  j["members"] = rep.members;
  const double scale = std::pow(static_cast<double>(rep.limit), 0.99);
  j["statistics"] = {{"exponent", 0.99}, {"count_over_limit_pow_exponent", json_number(rep.count / scale)}};
  j["metadata"] = {{"delta_max", 0.0025}, {"delta1_max", 0.000025}};
  return j;
}

inline int cmd_exceptions(const ScanConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  if (cfg.format == OutputFormat::binary) throw DomainError("exceptions supports --format csv or json");
  const auto t0 = std::chrono::steady_clock::now();
  const TableSource src = make_table(cfg, cfg.limit, log);
  const ExceptionReport rep = exceptional_scan(cfg.limit, cfg.m_min, src.table, cfg.threads);
  Output sink(cfg.output, out);
  std::ostream& os = sink.stream();
  if (cfg.format == OutputFormat::json) {
    os << exceptions_json(rep).dump() << "\n";
  } else {
    os << "n\n";
    for (std::uint64_t n : rep.members) os << n << "\n";
  }
  os.flush();
  log << "exceptions: limit=" << rep.limit << " m_min=" << rep.m_min << " count=" << rep.count
      << " squares_excluded=" << rep.squares_excluded
      << " count/limit^0.99=" << fmt(rep.count / std::pow(static_cast<double>(rep.limit), 0.99))
      << " wall_s=" << fmt(seconds_since(t0)) << "\n";
  return kOk;
}

inline int cmd_series(const ScanConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  if (cfg.format == OutputFormat::binary) throw DomainError("series supports --format csv or json");
  if (cfg.q_grid.back() > 20000) throw ResourceError("q_grid entries above 20000 are not supported");
  std::vector<std::uint64_t> ns = cfg.n_values;
  if (ns.empty()) ns = sample_nonsquares(1, cfg.limit, cfg.samples ? cfg.samples : 20, cfg.seed);
  const ConvergenceReport rep = series_convergence_report(ns, cfg.q_grid, cfg.prime_cutoff, cfg.threads);
  for (std::uint64_t n : rep.skipped_squares) log << "notice: n=" << n << " is a square; skipped\n";

  Output sink(cfg.output, out);
  std::ostream& os = sink.stream();
  if (cfg.format == OutputFormat::csv) {
    os << "n,Q,sigma_nQ,euler,abs_diff\n";
    for (const auto& r : rep.rows)
      os << r.n << ',' << r.Q << ',' << fmt(r.sigma_nQ) << ',' << fmt(r.euler) << ',' << fmt(r.abs_diff) << '\n';
  } else {
    const EulerProduct euler(cfg.prime_cutoff);
    nlohmann::json j;
    j["prime_cutoff"] = euler.cutoff();
    j["q_grid"] = rep.q_grid;
    j["skipped_squares"] = rep.skipped_squares;
    nlohmann::json meds = nlohmann::json::array();
    for (double m : rep.median_abs_diff) meds.push_back(json_number(m));
    j["median_abs_diff"] = meds;
    j["median_nonincreasing"] = rep.median_nonincreasing;
    nlohmann::json series = nlohmann::json::array();
    for (std::uint64_t n : ns) {
      const SeriesEstimate e = euler.evaluate(n);
      series.push_back({{"n", n},
                        {"value", json_number(e.value)},
                        {"cutoff", e.cutoff},
                        {"tail_estimate", json_number(e.tail_estimate)},
                        {"square_input", e.square_input}});
    }
    j["series"] = series;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"n", r.n},
                      {"Q", r.Q},
                      {"sigma_nQ", json_number(r.sigma_nQ)},
                      {"euler", json_number(r.euler)},
                      {"abs_diff", json_number(r.abs_diff)}});
    j["rows"] = rows;
    os << j.dump() << "\n";
  }
  os.flush();
  log << "series: prime_cutoff=" << cfg.prime_cutoff << " median_abs_diff=";
  for (std::size_t g = 0; g < rep.q_grid.size(); ++g)
    log << (g ? "," : "") << "Q" << rep.q_grid[g] << ":" << fmt(rep.median_abs_diff[g]);
  log << " nonincreasing=" << (rep.median_nonincreasing ? "yes" : "no") << "\n";
  return kOk;
}

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string tolerance;
};

/// All V(a, q), a = 1..q-1 coprime to q, by direct summation over m with a
/// table of q-th roots of unity.
inline std::vector<ComplexValue> gauss_sums_for_modulus(std::uint64_t q) {
  std::vector<ComplexValue> roots(q);
  for (std::uint64_t k = 0; k < q; ++k) roots[k] = unit_root(static_cast<std::int64_t>(k), q);
  std::vector<std::uint64_t> sq(q);
  for (std::uint64_t m = 1; m <= q; ++m) sq[m - 1] = (m % q) * (m % q) % q;
  std::vector<ComplexValue> out;
  for (std::uint64_t a = 1; a <= q; ++a) {
    if (std::gcd(a, q) != 1) continue;
    CompensatedSum<ComplexValue> s;
    for (std::uint64_t m = 0; m < q; ++m) s.add(roots[sq[m] * a % q]);
    out.push_back(s.value());
  }
  return out;
}

/// Largest relative deviation of |V(a,q)|^2 from q over odd q <= max_q.
inline double gauss_magnitude_sweep(std::uint64_t max_q, unsigned threads) {
  std::vector<double> worst((max_q + 1) / 2, 0.0);
  parallel_for(worst.size(), threads, [&](std::size_t i) {
    const std::uint64_t q = 2 * i + 1;
    double w = 0.0;
    for (const ComplexValue& v : gauss_sums_for_modulus(q))
      w = std::max(w, std::abs(std::norm(v) / static_cast<double>(q) - 1.0));
    worst[i] = w;
  });
  return worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
}

inline int cmd_verify(const ScanConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  if (cfg.format == OutputFormat::binary) throw DomainError("verify supports --format csv or json");
  if (cfg.circle_limit > kMaxCircleN) throw ResourceError("circle_limit above 10^5 is not supported");
  const std::uint64_t need = std::max(cfg.limit, cfg.circle_limit);
  const TableSource src = make_table(cfg, need, log);
  const PrimeTable& table = src.table;
  std::vector<CheckResult> checks;

  if (src.from_cache) {
    const PrimeTable fresh(table.limit());
    checks.push_back({"sieve_cache_matches_fresh_sieve", fresh == table, fresh == table ? 1.0 : 0.0, "exact"});
  }

  {
    double worst = 0.0;
    for (const CircleRow& r : circle_identity_check(cfg.circle_limit, table)) worst = std::max(worst, r.abs_err());
    checks.push_back({"circle_identity_max_abs_err", worst < 1e-4, worst, "<1e-4"});
  }
  {
    const double worst = gauss_magnitude_sweep(cfg.gauss_max_q, cfg.threads);
    checks.push_back({"gauss_magnitude_max_rel_dev", worst < 1e-6, worst, "<1e-6"});
  }
  {
    const ParsevalCheck pc = parseval_check(cfg.limit, cfg.parseval_q, table);
    checks.push_back({"parseval_ratio_to_NlogN", pc.ratio >= 0.5 && pc.ratio <= 1.5, pc.ratio, "[0.5,1.5]"});
    const double rel = std::abs(pc.mean_square_P - pc.sum_log_sq) / pc.sum_log_sq;
    checks.push_back({"parseval_discrete_rel_err", rel < 1e-9, rel, "<1e-9"});
  }
  {
    std::uint64_t scanned = 0;
    batch_scan_segments(1, cfg.limit, cfg.m_min, table, cfg.threads, [&](const ScanBlock& b) {
      for (std::uint32_t c : b.counts) scanned += c;
    });
    const std::uint64_t closed = double_count_total(cfg.limit, cfg.m_min, table);
    checks.push_back({"double_count_identity_diff", scanned == closed,
                      static_cast<double>(scanned) - static_cast<double>(closed), "exact"});
  }

  bool all = true;
  for (const auto& c : checks) all = all && c.passed;
  Output sink(cfg.output, out);
  std::ostream& os = sink.stream();
  if (cfg.format == OutputFormat::csv) {
    os << "check,passed,value,tolerance\n";
    for (const auto& c : checks) os << c.name << ',' << (c.passed ? 1 : 0) << ',' << fmt(c.value) << ',' << c.tolerance << '\n';
  } else {
    nlohmann::json j;
    j["limit"] = cfg.limit;
    j["m_min"] = cfg.m_min;
    j["passed"] = all;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
      arr.push_back({{"name", c.name}, {"passed", c.passed}, {"value", json_number(c.value)}, {"tolerance", c.tolerance}});
    j["checks"] = arr;
    os << j.dump() << "\n";
  }
  os.flush();
  for (const auto& c : checks)
    log << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << fmt(c.value) << " tol=" << c.tolerance << "\n";
  return all ? kOk : kVerifyFailed;
}

inline nlohmann::json miech_json(const MiechSummary& s) {
  return {{"N", s.N},
          {"m_min", s.m_min},
          {"series_cutoff", s.series_cutoff},
          {"used", s.used},
          {"median", json_number(s.median)},
          {"p5", json_number(s.p5)},
          {"p25", json_number(s.p25)},
          {"p75", json_number(s.p75)},
          {"p95", json_number(s.p95)},
          {"iqr", json_number(s.iqr())},
          {"within_0_25", json_number(s.within_25)},
          {"within_0_5", json_number(s.within_50)},
          {"small_series", s.small_series},
          {"skipped_squares", s.skipped_squares}};
}

inline int cmd_bounds(const ScanConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  if (cfg.format == OutputFormat::binary) throw DomainError("bounds supports --format csv or json");
  const auto t0 = std::chrono::steady_clock::now();
  const TableSource src = make_table(cfg, cfg.limit, log);
  const EulerProduct euler(cfg.prime_cutoff);
  const BoundScan scan = bound_check_scan(cfg.limit, cfg.m_min, cfg.constants, euler, src.table, cfg.threads);

  MiechSummary miech;
  const std::uint64_t lo = cfg.limit / 2 + 1;
  const std::uint64_t nonsquares = cfg.limit - lo + 1 - (isqrt(cfg.limit) - isqrt(lo - 1));
  const std::uint64_t want = std::min<std::uint64_t>(cfg.samples ? cfg.samples : 1000, nonsquares);
  if (want > 0) miech = miech_ratio_stats(cfg.limit, sample_nonsquares(lo, cfg.limit, want, cfg.seed), euler,
                                          src.table, cfg.m_min, cfg.threads);

  Output sink(cfg.output, out);
  std::ostream& os = sink.stream();
  if (cfg.format == OutputFormat::csv) {
    os << "n,measured,hl,ratio,selberg_rhs,comb_rhs,margin_s,margin_c\n";
    for (const BoundCheckRow& r : scan.rows)
      os << r.n << ',' << fmt(r.measured_weighted) << ',' << fmt(r.hl_prediction) << ',' << fmt(r.miech_ratio) << ','
         << fmt(r.selberg_rhs) << ',' << fmt(r.comb_rhs) << ',' << fmt(r.margin_selberg()) << ','
         << fmt(r.margin_comb()) << '\n';
  } else {
    nlohmann::json j;
    j["N"] = scan.N;
    j["m_min"] = scan.m_min;
    j["series_cutoff"] = scan.series_cutoff;
    j["constants"] = {{"selberg_C", json_number(cfg.constants.selberg_C)},
                      {"comb_C1", json_number(cfg.constants.comb_C1)},
                      {"comb_C2", json_number(cfg.constants.comb_C2)},
                      {"u", json_number(cfg.constants.u)}};
    j["rows_checked"] = scan.rows.size();
    j["selberg_violations"] = scan.selberg_violations;
    j["comb_violations"] = scan.comb_violations;
    j["max_margin_selberg"] = json_number(scan.max_margin_selberg);
    j["max_margin_comb"] = json_number(scan.max_margin_comb);
    j["miech"] = miech_json(miech);
    os << j.dump() << "\n";
  }
  os.flush();
  log << "bounds: N=" << scan.N << " m_min=" << scan.m_min << " series_cutoff=" << scan.series_cutoff
      << " rows=" << scan.rows.size() << " selberg_violations=" << scan.selberg_violations
      << " comb_violations=" << scan.comb_violations << " max_margin_s=" << fmt(scan.max_margin_selberg)
      << " max_margin_c=" << fmt(scan.max_margin_comb) << "\n";
  print_constants(cfg, log);
  log << "miech: used=" << miech.used << " median=" << fmt(miech.median) << " iqr=" << fmt(miech.iqr())
      << " p5=" << fmt(miech.p5) << " p95=" << fmt(miech.p95) << " small_series=" << miech.small_series.size()
      << " wall_s=" << fmt(seconds_since(t0)) << "\n";
  return scan.selberg_violations + scan.comb_violations == 0 ? kOk : kVerifyFailed;
}

using Command = std::function<int(const ScanConfig&, std::ostream&, std::ostream&)>;

inline const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table{
      {"scan", cmd_scan}, {"exceptions", cmd_exceptions}, {"series", cmd_series},
      {"verify", cmd_verify}, {"bounds", cmd_bounds}};
  return table;
}

/// Runs a command and maps exceptions onto the exit-code contract.
inline int run_command(const std::string& name, const ScanConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    return commands().at(name)(cfg, out, err);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << "\n";
    return kResource;
  } catch (const std::bad_alloc&) {
    err << "resource error: out of memory\n";
    return kResource;
  } catch (const CacheError& e) {
    err << "cache error: " << e.what() << "\n";
    return kVerifyFailed;
  } catch (const VerificationError& e) {
    err << "verification failed: " << e.what() << "\n";
    return kVerifyFailed;
  }
}

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

inline const std::vector<FlagSpec>& flag_specs() {
  static const std::vector<FlagSpec> specs{
      {"--limit", "limit", "upper end N of the scanned range (accepts 10^6, 1e6)"},
      {"--m-min", "m_min", "smallest m in p + m^2 (0 or 1)"},
      {"--prime-cutoff", "prime_cutoff", "largest prime in the truncated Euler product"},
      {"--q-grid", "q_grid", "comma-separated Q values for the Gauss-sum series"},
      {"--u", "u", "sieve parameter u of the combinatorial bound"},
      {"--selberg-c", "selberg_c", "O-constant C of the Selberg bound"},
      {"--comb-c1", "comb_c1", "O-constant C1 of the combinatorial bound"},
      {"--comb-c2", "comb_c2", "O-constant C2 of the combinatorial bound"},
      {"--out", "out", "output path, - for stdout"},
      {"--format", "format", "csv, json or binary"},
      {"--threads", "threads", "worker threads, 0 for one per hardware thread"},
      {"--cache", "cache", "sieve cache file (PSQ1 format); empty for none"},
      {"--samples", "samples", "random sample size, 0 for the command default (series 20, bounds 1000)"},
      {"--seed", "seed", "seed for random samples"},
      {"--n-values", "n_values", "explicit comma-separated n for series"},
      {"--circle-limit", "circle_limit", "N of the circle identity check in verify"},
      {"--gauss-max-q", "gauss_max_q", "largest odd q of the Gauss magnitude sweep in verify"},
      {"--parseval-q", "parseval_q", "Q of the Parseval check in verify"},
  };
  return specs;
}

inline std::string default_value(const std::string& key) {
  const std::string text = ScanConfig{}.to_text();
  const std::string tag = key + "=";
  const auto pos = text.find(tag);
  return text.substr(pos + tag.size(), text.find('\n', pos) - pos - tag.size());
}

/// Full command line: psq <subcommand> [--flag value ...].
/// Defaults, then --config file values, then explicit flags.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prime plus square: representation counts, singular series, sieve bounds"};
  app.require_subcommand(1);
  std::map<std::string, std::string> raw;
  std::string config_path;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> about{
      {"scan", "count representations n = p + m^2 for every n <= limit"},
      {"exceptions", "list non-squares n <= limit with no representation"},
      {"series", "Gauss-sum singular series against the truncated Euler product"},
      {"verify", "circle identity, Gauss magnitudes, Parseval and double-count checks"},
      {"bounds", "measured sums against the sieve bounds, plus ratio statistics"}};
  for (const auto& [name, desc] : about) {
    CLI::App* sub = app.add_subcommand(name, desc);
    for (const FlagSpec& f : flag_specs())
      sub->add_option(f.flag, raw[f.key], f.help)->default_str(default_value(f.key));
    sub->add_option("--config", config_path, "flat key=value config file; flags override it");
    subs[name] = sub;
  }
  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    // Help requests exit 0 and print the selected subcommand's help.
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }
  std::string chosen;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) chosen = name;
  ScanConfig cfg;
  try {
    if (!config_path.empty()) cfg.apply_file(config_path);
    for (const FlagSpec& f : flag_specs())
      if (subs[chosen]->count(f.flag) > 0) cfg.set(f.key, raw[f.key]);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return run_command(chosen, cfg, out, err);
}

}  // namespace psq::cli
