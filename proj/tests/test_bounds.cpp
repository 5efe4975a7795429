#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "psq/bounds.hpp"

using namespace psq;

namespace {
SeriesEstimate fake(std::uint64_t n, double value) {
  SeriesEstimate s;
  s.n = n;
  s.value = value;
  s.cutoff = 97;
  return s;
}
}  // namespace

TEST(SieveBounds, MainTermsWithZeroConstants) {
  const auto s = fake(500, 1.3);
  const double N = 1000.0, L = std::log(N);
  EXPECT_DOUBLE_EQ(selberg_bound_rhs(500, 1000, s, 0.0), 2 * 1.3 * N / L);
  EXPECT_DOUBLE_EQ(combinatorial_bound_rhs(500, 1000, 3.0, s, 0.0, 0.0), 3.0 * std::exp(-std::numbers::egamma) * 1.3 * N / L);
  EXPECT_NEAR(std::exp(-std::numbers::egamma), 0.5615, 1e-4);
}

TEST(SieveBounds, ErrorTermsAreExplicit) {
  const auto s = fake(10, 1.0);
  const double N = 1e6, L = std::log(N);
  EXPECT_NEAR(selberg_bound_rhs(10, 1000000, s, 1.0), 2 * N / L * (1 + std::log(std::log(3 * N)) / L), 1e-6);
  const double u = 3.0;
  const double err = std::exp(-u * (std::log(u) - std::log(std::log(3 * u)) - 2));
  EXPECT_NEAR(combinatorial_bound_rhs(10, 1000000, u, s, 1.0, 1.0),
              u * std::exp(-std::numbers::egamma) * N / L * (1 + err + u / L), 1e-6);
}

TEST(SieveBounds, MonotoneInConstantsAndLinearInSeries) {
  const auto a = fake(77, 0.8), b = fake(77, 1.6);
  double prev = 0;
  for (double C : {0.0, 0.5, 1.0, 4.0}) {
    const double v = selberg_bound_rhs(77, 5000, a, C);
    EXPECT_GT(v, prev);
    prev = v;
    EXPECT_NEAR(selberg_bound_rhs(77, 5000, b, C), 2 * v, 1e-9 * v);
  }
  EXPECT_LT(combinatorial_bound_rhs(77, 5000, 3, a, 0, 0), combinatorial_bound_rhs(77, 5000, 3, a, 1, 0));
  EXPECT_LT(combinatorial_bound_rhs(77, 5000, 3, a, 0, 0), combinatorial_bound_rhs(77, 5000, 3, a, 0, 1));
  // With zero constants the bound is linear in u.
  EXPECT_NEAR(combinatorial_bound_rhs(77, 5000, 4, a, 0, 0) / combinatorial_bound_rhs(77, 5000, 2, a, 0, 0), 2.0,
              1e-12);
}

TEST(SieveBounds, DomainErrors) {
  const auto s = fake(100, 1.0);
  EXPECT_THROW(selberg_bound_rhs(100, 99, s), DomainError);
  EXPECT_THROW(selberg_bound_rhs(101, 200, s), DomainError);  // series for another n
  EXPECT_THROW(combinatorial_bound_rhs(100, 1000, 0.5, s), DomainError);
  EXPECT_THROW(combinatorial_bound_rhs(100, 1000, 20, s), DomainError);  // 1000^(1/20) < 2
  EXPECT_NO_THROW(combinatorial_bound_rhs(100, 1024, 10, s));
  SeriesEstimate sq = fake(100, 0.1);
  sq.square_input = true;
  EXPECT_THROW(selberg_bound_rhs(100, 1000, sq), DomainError);
  EXPECT_THROW(combinatorial_bound_rhs(100, 1000, 3, sq), DomainError);
  EXPECT_THROW(hl_prediction(100, sq), DomainError);
  EXPECT_THROW(miech_ratio(100, 5, sq), DomainError);
}

TEST(Prediction, ScalesLikeRootN) {
  const auto a = fake(100, 1.0), b = fake(10000, 1.0);
  EXPECT_DOUBLE_EQ(hl_prediction(100, a), 10.0 / std::log(100.0));
  EXPECT_NEAR(hl_prediction(10000, b) / hl_prediction(100, a), 10.0 / 2.0, 1e-12);
  EXPECT_THROW(hl_prediction(1, fake(1, 1.0)), DomainError);
  EXPECT_DOUBLE_EQ(miech_ratio(100, 7, a), 7 * std::log(100.0) / 10.0);
}

TEST(Statistics, Percentiles) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.5), 3);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.25), 2);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.1), 1.4);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 1.0), 5);
  EXPECT_TRUE(std::isnan(percentile_sorted({}, 0.5)));
}

TEST(Statistics, SampleNonsquares) {
  const auto s = sample_nonsquares(1, 100, 90, 3);
  EXPECT_EQ(s.size(), 90u);  // every non-square in [1, 100]
  std::vector<std::uint64_t> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (auto n : s) EXPECT_FALSE(is_square(n));
  EXPECT_EQ(sample_nonsquares(1000, 5000, 50, 9), sample_nonsquares(1000, 5000, 50, 9));
  EXPECT_NE(sample_nonsquares(1000, 5000, 50, 9), sample_nonsquares(1000, 5000, 50, 10));
  EXPECT_THROW(sample_nonsquares(1, 100, 91, 3), DomainError);
  EXPECT_THROW(sample_nonsquares(0, 100, 1, 3), DomainError);
}

TEST(Statistics, MiechSummaryFields) {
  const PrimeTable t(20000);
  const EulerProduct e(1000);
  std::vector<std::uint64_t> sample = sample_nonsquares(10001, 20000, 300, 5);
  sample.push_back(10201);  // 101^2
  const MiechSummary m = miech_ratio_stats(20000, sample, e, t, 1, 2);
  EXPECT_EQ(m.skipped_squares, (std::vector<std::uint64_t>{10201}));
  EXPECT_EQ(m.used + m.small_series.size(), 300u);
  EXPECT_LE(m.p5, m.p25);
  EXPECT_LE(m.p25, m.median);
  EXPECT_LE(m.median, m.p75);
  EXPECT_LE(m.p75, m.p95);
  EXPECT_GT(m.median, 0.5);
  EXPECT_LT(m.median, 1.5);
  EXPECT_GE(m.within_50, m.within_25);
  EXPECT_THROW(miech_ratio_stats(20000, {100}, e, t), DomainError);
  // Same result for any thread count.
  const MiechSummary m1 = miech_ratio_stats(20000, sample, e, t, 1, 1);
  EXPECT_EQ(m1.median, m.median);
  EXPECT_EQ(m1.iqr(), m.iqr());
}

TEST(BoundScan, SmallRangeAgainstDirectRecomputation) {
  const PrimeTable t(3000);
  const EulerProduct e(2000);
  BoundConstants k;
  k.selberg_C = 0.0;
  const BoundScan scan = bound_check_scan(3000, 1, k, e, t, 1);
  EXPECT_EQ(scan.rows.size(), 2999u - (isqrt(3000) - 1));  // n = 2..3000, minus squares 4..2916
  EXPECT_EQ(scan.selberg_violations, 0u);
  EXPECT_EQ(scan.comb_violations, 0u);
  for (const BoundCheckRow& r : scan.rows) {
    ASSERT_FALSE(is_square(r.n));
    const ReprRecord rec = count_representations(r.n, 1, t, false);
    ASSERT_EQ(r.count, rec.count);
    ASSERT_EQ(r.measured_weighted, rec.weighted);
    ASSERT_EQ(r.series, e.evaluate(r.n).value);
    ASSERT_LE(r.margin_selberg(), 1.0);
    ASSERT_LE(r.margin_comb(), 1.0);
  }
  const BoundScan mt = bound_check_scan(3000, 1, k, e, t, 4);
  EXPECT_EQ(mt.max_margin_selberg, scan.max_margin_selberg);
  EXPECT_EQ(mt.max_margin_comb, scan.max_margin_comb);
  EXPECT_THROW(bound_check_scan(1, 1, k, e, t), DomainError);
}
