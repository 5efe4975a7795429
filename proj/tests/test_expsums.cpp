#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "psq/expsums.hpp"
#include "psq/fft.hpp"

using namespace psq;

namespace {
double theta(std::uint64_t lo_excl, std::uint64_t hi, const std::vector<char>& sieve) {
  double s = 0;
  for (std::uint64_t p = lo_excl + 1; p <= hi; ++p)
    if (sieve[p]) s += std::log(static_cast<double>(p));
  return s;
}
}  // namespace

TEST(GaussSum, SmallCases) {
  for (std::int64_t a : {-5, 0, 1, 7, 1000}) {
    const ComplexValue v = gauss_sum_V(a, 1);
    EXPECT_DOUBLE_EQ(v.real(), 1.0);
    EXPECT_DOUBLE_EQ(v.imag(), 0.0);
  }
  const ComplexValue v13 = gauss_sum_V(1, 3);
  EXPECT_NEAR(v13.real(), 0.0, 1e-14);
  EXPECT_NEAR(v13.imag(), std::sqrt(3.0), 1e-14);
  // V(1,2) = e(1/2) + e(4/2) = -1 + 1
  EXPECT_NEAR(std::abs(gauss_sum_V(1, 2)), 0.0, 1e-14);
  EXPECT_THROW(gauss_sum_V(1, 0), DomainError);
}

TEST(GaussSum, MatchesNaiveSummation) {
  for (std::uint64_t q = 1; q <= 150; ++q)
    for (std::int64_t a = 0; a < static_cast<std::int64_t>(q); ++a)
      ASSERT_LT(std::abs(gauss_sum_V(a, q) - oracle::gauss_sum_naive(a, q)), 1e-9) << a << "/" << q;
}

TEST(GaussSum, MagnitudeLawForOddModuli) {
  for (std::uint64_t q = 1; q <= 301; q += 2)
    for (std::uint64_t a = 1; a <= q; ++a) {
      if (std::gcd(a, q) != 1) continue;
      const double n2 = std::norm(gauss_sum_V(static_cast<std::int64_t>(a), q));
      ASSERT_NEAR(n2 / static_cast<double>(q), 1.0, 1e-6) << a << "/" << q;
    }
}

TEST(GaussSum, PeriodicityConjugationAndCompleteModulus) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 400; ++i) {
    const std::uint64_t q = 1 + rng() % 400;
    const auto a = static_cast<std::int64_t>(rng() % 5000) - 2500;
    const auto qs = static_cast<std::int64_t>(q);
    ASSERT_LT(std::abs(gauss_sum_V(a + qs, q) - gauss_sum_V(a, q)), 1e-9);
    ASSERT_LT(std::abs(gauss_sum_V(-a, q) - std::conj(gauss_sum_V(a, q))), 1e-9);
    ASSERT_LE(std::abs(gauss_sum_V(a, q)), static_cast<double>(q) + 1e-9);
  }
}

TEST(GaussSum, ClassicalSignForPrimes) {
  // V(1,p) = sqrt(p) for p = 1 mod 4 and i sqrt(p) for p = 3 mod 4.
  for (std::uint64_t p = 3; p < 2000; p += 2) {
    if (!oracle::miller_rabin(p)) continue;
    const ComplexValue v = gauss_sum_V(1, p);
    const double r = std::sqrt(static_cast<double>(p));
    if (p % 4 == 1) {
      ASSERT_NEAR(v.real(), r, 1e-9);
      ASSERT_NEAR(v.imag(), 0.0, 1e-9);
    } else {
      ASSERT_NEAR(v.real(), 0.0, 1e-9);
      ASSERT_NEAR(v.imag(), r, 1e-9);
    }
    // V(a,p) = (a/p) V(1,p)
    for (std::int64_t a : {2, 3, 5, 6}) {
      if (static_cast<std::uint64_t>(a) % p == 0) continue;
      ASSERT_LT(std::abs(gauss_sum_V(a, p) - static_cast<double>(jacobi(a, static_cast<std::int64_t>(p))) * v), 1e-9);
    }
  }
}

TEST(SigmaNQ, BaseCases) {
  for (std::uint64_t n : {1ull, 2ull, 17ull, 99991ull}) {
    EXPECT_NEAR(sigma_nQ(n, 1), 1.0, 1e-15);
    // q = 2 contributes mu(2)/(2*1) V(1,2) e(-n/2), and V(1,2) is zero.
    const std::complex<double> t2 = -0.5 * oracle::gauss_sum_naive(1, 2) * std::polar(1.0, -std::numbers::pi * double(n));
    EXPECT_NEAR(sigma_nQ(n, 2), 1.0 + t2.real(), 1e-12);
  }
  EXPECT_THROW(sigma_nQ(0, 5), DomainError);
  EXPECT_THROW(sigma_nQ(5, 0), DomainError);
}

TEST(SigmaNQ, AgreesWithMultiplicativeClosedForm) {
  const GaussSeries gs(250);
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 30; ++i) {
    const std::uint64_t n = 1 + rng() % 100000;
    for (std::uint64_t Q : {3ull, 10ull, 49ull, 120ull, 250ull})
      ASSERT_NEAR(gs.value(n, Q), oracle::sigma_closed_form(n, Q), 1e-9) << n << " Q=" << Q;
  }
}

TEST(SigmaNQ, AssembledSumIsReal) {
  const GaussSeries gs(300);
  for (std::uint64_t n : {5ull, 1234ull, 77777ull}) {
    std::complex<double> total = 0;
    for (const auto& [q, t] : gs.terms(n, 300)) total += t;
    EXPECT_LT(std::abs(total.imag()), 1e-9);
    EXPECT_NEAR(total.real(), gs.value(n, 300), 1e-9);
  }
  EXPECT_THROW(gs.value(5, 301), DomainError);
}

TEST(GeneratingSums, PAtZeroAndHalf) {
  const PrimeTable t(1000);
  const auto s = oracle::byte_sieve(1000);
  const ComplexValue p0 = eval_P_alpha(0.0, 30, 1000, t);
  EXPECT_NEAR(p0.real(), theta(30, 1000, s), 1e-9);
  EXPECT_NEAR(p0.imag(), 0.0, 1e-12);
  const ComplexValue ph = eval_P_alpha(0.5, 0, 10, PrimeTable(10));
  EXPECT_NEAR(ph.real(), std::log(2.0) - std::log(3.0) - std::log(5.0) - std::log(7.0), 1e-12);
  EXPECT_NEAR(ph.imag(), 0.0, 1e-12);
  EXPECT_THROW(eval_P_alpha(0.1, 0, 1001, t), DomainError);
  EXPECT_THROW(eval_P_alpha(0.1, 1000, 1000, t), DomainError);
}

TEST(GeneratingSums, TriangleInequality) {
  const PrimeTable t(5000);
  const double p0 = eval_P_alpha(0.0, 0, 5000, t).real();
  const double f0 = eval_F_alpha(0.0, 5000).real();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng);
    ASSERT_LE(std::abs(eval_P_alpha(a, 0, 5000, t)), p0 + 1e-9);
    ASSERT_LE(std::abs(eval_F_alpha(a, 5000)), f0 + 1e-12);
  }
}

TEST(GeneratingSums, FTermCounts) {
  EXPECT_DOUBLE_EQ(eval_F_alpha(0.0, 100).real(), 5.0);  // m = 6..10
  EXPECT_DOUBLE_EQ(eval_F_alpha(0.0, 16).real(), 2.0);   // m = 3, 4
  EXPECT_DOUBLE_EQ(eval_F_alpha(0.0, 4).real(), 1.0);    // m = 2
  EXPECT_THROW(eval_F_alpha(0.0, 3), DomainError);
}

TEST(GeneratingSums, CoefficientIntegralBySampling) {
  // With L > 2N equally spaced points the integral of P F e(-n a) is an exact
  // average, so this reaches R(n) through the exponential sums themselves.
  constexpr std::uint64_t N = 64;
  const PrimeTable t(N);
  constexpr int L = 256;
  for (std::uint64_t n = N / 2 + 1; n <= N; ++n) {
    std::complex<double> acc = 0;
    for (int k = 0; k < L; ++k) {
      const double a = static_cast<double>(k) / L;
      acc += eval_P_alpha(a, 0, N, t) * eval_F_alpha(a, N) * unit_phase(-static_cast<double>(n) * a);
    }
    acc /= static_cast<double>(L);
    ASSERT_NEAR(acc.real(), windowed_weight(n, N, 0, t), 1e-9) << n;
    ASSERT_NEAR(acc.imag(), 0.0, 1e-9);
  }
}

TEST(Fft, ConvolutionMatchesSchoolbook) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (std::size_t nx : {1u, 2u, 7u, 64u, 300u}) {
    std::vector<double> x(nx), y(nx / 2 + 3);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    std::vector<double> ref(x.size() + y.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < y.size(); ++j) ref[i + j] += x[i] * y[j];
    const auto got = fft::convolve_real(x, y);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) ASSERT_NEAR(got[k], ref[k], 1e-10);
  }
  std::vector<fft::cplx> bad(3);
  EXPECT_THROW(fft::transform(bad, false), DomainError);
}

TEST(CircleIdentity, SixteenAndNoRepresentation) {
  const PrimeTable t(16);
  const auto rows = circle_identity_check(16, t);
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) {
    EXPECT_GT(r.n, 8u);
    EXPECT_LE(r.n, 16u);
    EXPECT_LT(r.abs_err(), 1e-6);
  }
  // n = 10: 10 - 9 = 1, 10 - 16 < 0; no representation.
  EXPECT_EQ(rows[1].n, 10u);
  EXPECT_EQ(rows[1].direct, 0.0);
  EXPECT_NEAR(rows[1].convolved, 0.0, 1e-9);
  // n = 11 = 2 + 9
  EXPECT_NEAR(rows[2].direct, std::log(2.0), 1e-15);
}

TEST(CircleIdentity, TwoThousandAndPrimeWindow) {
  const PrimeTable t(2000);
  double worst = 0;
  for (const auto& r : circle_identity_check(2000, t)) worst = std::max(worst, r.abs_err());
  EXPECT_LT(worst, 1e-4);
  double worst_q = 0;
  for (const auto& r : circle_identity_check(2000, t, 37)) worst_q = std::max(worst_q, r.abs_err());
  EXPECT_LT(worst_q, 1e-4);
}

TEST(CircleIdentity, Limits) {
  const PrimeTable t(200000);
  EXPECT_THROW(circle_identity_check(15, t), DomainError);
  EXPECT_THROW(circle_identity_check(100001, t), ResourceError);
  EXPECT_THROW(circle_identity_check(5000, PrimeTable(4000)), DomainError);
}

TEST(Parseval, DiscreteIdentityAndScale) {
  const PrimeTable t(100000);
  const ParsevalCheck pc = parseval_check(100000, 100, t);
  EXPECT_NEAR(pc.mean_square_P / pc.sum_log_sq, 1.0, 1e-10);
  EXPECT_GT(pc.ratio, 0.5);
  EXPECT_LT(pc.ratio, 1.5);
}
