#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hampde/diophantine.hpp"
#include "test_util.hpp"

namespace hampde {
namespace {

ModelParams golden_d(int d) {
  return ModelParams::from_ratio(2.0 * std::numbers::pi, parse_enclosure("golden"), d, 5.5, 2.0,
                                 EquationKind::nls);
}

TEST(ContinuedFraction, SevenThirds) {
  auto cf = continued_fraction(Enclosure::exact(Rational(7, 3)), 5);
  ASSERT_EQ(cf.quotients.size(), 2u);
  EXPECT_EQ(cf.quotients[0], 2);
  EXPECT_EQ(cf.quotients[1], 3);
  EXPECT_EQ(cf.convergents[0].p, 2);
  EXPECT_EQ(cf.convergents[0].q, 1);
  EXPECT_EQ(cf.convergents[1].p, 7);
  EXPECT_EQ(cf.convergents[1].q, 3);
  EXPECT_TRUE(cf.terminated);
  EXPECT_FALSE(cf.precision_exhausted);
}

TEST(ContinuedFraction, GoldenGivesFibonacciRatios) {
  auto cf = continued_fraction(parse_enclosure("golden"), 10);
  ASSERT_EQ(cf.quotients.size(), 10u);
  BigInt f0 = 1, f1 = 1;  // F_1, F_2
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_EQ(cf.quotients[k], 1);
    // k-th convergent is F_{k+2}/F_{k+1}
    EXPECT_EQ(cf.convergents[k].p, f1);
    EXPECT_EQ(cf.convergents[k].q, f0);
    BigInt next = f0 + f1;
    f0 = f1;
    f1 = next;
  }
}

TEST(ContinuedFraction, SqrtTwoConvergentsSquareTowardTwo) {
  auto cf = continued_fraction(parse_enclosure("sqrt2"), 6);
  ASSERT_EQ(cf.quotients.size(), 6u);
  EXPECT_EQ(cf.quotients[0], 1);
  for (std::size_t k = 1; k < 6; ++k) EXPECT_EQ(cf.quotients[k], 2);
  for (const auto& c : cf.convergents) {
    BigInt pell = c.p * c.p - 2 * c.q * c.q;
    EXPECT_TRUE(pell == 1 || pell == -1);
  }
  auto has = [&](int p, int q) {
    return std::any_of(cf.convergents.begin(), cf.convergents.end(),
                       [&](const Convergent& c) { return c.p == p && c.q == q; });
  };
  EXPECT_TRUE(has(3, 2));
  EXPECT_TRUE(has(7, 5));
  EXPECT_TRUE(has(17, 12));
}

TEST(ContinuedFraction, RecurrenceAndApproximationInequality) {
  for (const char* name : {"golden", "silver", "sqrt3", "e"}) {
    auto x = parse_enclosure(name);
    auto cf = continued_fraction(x, 40);
    for (std::size_t k = 2; k < cf.convergents.size(); ++k) {
      const auto& a = cf.quotients[k];
      EXPECT_EQ(cf.convergents[k].p, a * cf.convergents[k - 1].p + cf.convergents[k - 2].p);
      EXPECT_EQ(cf.convergents[k].q, a * cf.convergents[k - 1].q + cf.convergents[k - 2].q);
    }
    for (std::size_t k = 0; k + 1 < cf.convergents.size(); ++k) {
      const auto& c = cf.convergents[k];
      HighReal gap = boost::multiprecision::abs(x.approx - to_high(Rational(c.p, c.q)));
      HighReal bound = HighReal(1) / HighReal(c.q * cf.convergents[k + 1].q);
      EXPECT_LT(gap, bound) << name << " k=" << k;
    }
  }
}

TEST(ContinuedFraction, EulerNumberPattern) {
  auto cf = continued_fraction(parse_enclosure("e"), 12);
  const int expected[] = {2, 1, 2, 1, 1, 4, 1, 1, 6, 1, 1, 8};
  for (int k = 0; k < 12; ++k) EXPECT_EQ(cf.quotients[static_cast<std::size_t>(k)], expected[k]);
}

TEST(ContinuedFraction, WideEnclosureStopsWithCertifiedPrefix) {
  Enclosure rough{Rational(14142, 10000), Rational(14143, 10000), HighReal("1.41425")};
  auto cf = continued_fraction(rough, 50);
  EXPECT_TRUE(cf.precision_exhausted);
  EXPECT_LT(cf.quotients.size(), 50u);
  auto exact = continued_fraction(parse_enclosure("sqrt2"), static_cast<int>(cf.quotients.size()));
  for (std::size_t k = 0; k < cf.quotients.size(); ++k) EXPECT_EQ(cf.quotients[k], exact.quotients[k]);
}

TEST(ContinuedFraction, GoldenRunsDeepAtWorkingPrecision) {
  auto cf = continued_fraction(parse_enclosure("golden"), 1000);
  EXPECT_TRUE(cf.precision_exhausted);
  // 240 certified bits give roughly 240 / log2(golden^2) ≈ 170 quotients
  EXPECT_GT(cf.quotients.size(), 150u);
}

TEST(IrrationalityProfile, RationalIsDetected) {
  auto prof = irrationality_profile(Enclosure::exact(Rational(1, 2)), 100);
  EXPECT_TRUE(prof.rational);
  EXPECT_TRUE(std::isinf(prof.running_max));
}

TEST(IrrationalityProfile, GoldenObeysHurwitz) {
  auto x = parse_enclosure("golden");
  auto prof = irrationality_profile(x, BigInt(1000000));
  ASSERT_FALSE(prof.entries.empty());
  EXPECT_FALSE(prof.rational);
  const HighReal phi = x.approx;
  BigInt q_prev = 1;  // the skipped convergent 2/1
  for (const auto& e : prof.entries) {
    // convergent identity |x − p_k/q_k| = 1/(q_k (x_{k+1} q_k + q_{k−1})), with
    // complete quotient x_{k+1} = golden for every k
    HighReal gap = boost::multiprecision::abs(x.approx - to_high(Rational(e.p, e.q)));
    HighReal q = HighReal(e.q);
    HighReal predicted = 1 / (q * (phi * q + HighReal(q_prev)));
    EXPECT_LT(boost::multiprecision::abs(gap / predicted - 1), HighReal(1e-40));
    // hence the exponent stays below 2 + ln(golden + q_{k−1}/q_k)/ln q, which tends to 2 + ln√5/ln q
    const double lq = std::log(e.q.convert_to<double>());
    const double c = phi.convert_to<double>() + q_prev.convert_to<double>() / e.q.convert_to<double>();
    EXPECT_LE(e.exponent, 2.0 + std::log(c) / lq + 1e-12);
    q_prev = e.q;
  }
  // the exponent creeps down toward 2; at q near 10^6 it sits just under 2.06
  EXPECT_LT(prof.entries.back().exponent, 2.06);
  EXPECT_GT(prof.entries.back().q, 500000);
}

TEST(IrrationalityProfile, LiouvilleWitnessExceedsThree) {
  auto prof = irrationality_profile(parse_enclosure("liouville:4"), BigInt(1000000));
  EXPECT_GT(prof.running_max, 3.0);
  EXPECT_FALSE(prof.rational);  // its exact denominator 10^24 lies beyond q_max
}

TEST(IrrationalityProfile, RejectsTinyQmax) {
  EXPECT_THROW(irrationality_profile(parse_enclosure("golden"), 1), RangeError);
}

TEST(SmallDivisor, ExactResonanceAndOrigin) {
  auto params = ModelParams::from_periods(2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 2, 5.5,
                                          2.0, EquationKind::nls);
  EXPECT_EQ(small_divisor(4, 2, params), 0.0);
  EXPECT_EQ(small_divisor(0, 0, params), 0.0);
}

TEST(SmallDivisor, GoldenHurwitzAtFibonacciMode) {
  auto params = golden_d(1);
  double best = std::numeric_limits<double>::infinity();
  for (long long p = -10000; p <= 10000; ++p) best = std::min(best, std::abs(small_divisor(p, 89, params)));
  const double hurwitz = (2.0 * std::numbers::pi / params.T()) / (std::sqrt(5.0) * 89.0);
  EXPECT_GT(best, 0.0);
  EXPECT_GE(best, hurwitz * (1.0 - 1e-3));
  // the double form agrees with the working-precision form
  EXPECT_NEAR(best, small_divisor_high(BigInt(144), 89, params).convert_to<double>(), 1e-12);
}

TEST(SmallDivisor, ScalingConsistency) {
  auto params = golden_d(2);
  const double x = params.ratio().to_double();
  for (int n = 1; n < 20; ++n) {
    for (long long p = -5; p < 400; p += 7) {
      EXPECT_NEAR(small_divisor(p, n, params),
                  2.0 * std::numbers::pi / params.T() * (static_cast<double>(p) - x * n * n), 1e-10);
    }
  }
}

TEST(DivisorScan, GoldenLinearLaw) {
  auto table = divisor_scan(golden_d(1), 256, 1000);
  EXPECT_GE(table.fitted_exponent, -1.1);
  EXPECT_LE(table.fitted_exponent, -0.9);
  EXPECT_GT(table.fitted_constant, 0.0);
  EXPECT_TRUE(table.bound_holds);
  EXPECT_EQ(table.precision_bits, 256);
}

TEST(DivisorScan, RationalRatioReportsResonance) {
  auto params = ModelParams::from_ratio(2.0 * std::numbers::pi, Enclosure::exact(Rational(1)), 2,
                                        5.5, 2.0, EquationKind::nls);
  try {
    divisor_scan(params, 16, 1000);
    FAIL() << "expected a resonance";
  } catch (const ResonanceError& e) {
    EXPECT_EQ(e.p(), 1);
    EXPECT_EQ(e.n(), 1);
  }
}

TEST(DivisorScan, GoldenQuadraticBound) {
  auto table = divisor_scan(golden_d(2), 128, 40000);
  EXPECT_DOUBLE_EQ(table.bound_exponent, 2.0);
  EXPECT_TRUE(table.bound_holds);
  EXPECT_GT(table.fitted_constant, 0.0);
}

TEST(DivisorScan, WindowTooSmallNamesFirstRow) {
  // minimizer round(golden·n) first exceeds 20 at n = 13
  try {
    divisor_scan(golden_d(1), 64, 20);
    FAIL() << "expected a window error";
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("n = 13 "), std::string::npos) << e.what();
  }
  EXPECT_THROW(divisor_scan(golden_d(1), 4, 100), RangeError);
}

TEST(DivisorScan, MinimizerBeatsBruteForceAndNeighborBound) {
  auto params = golden_d(1);
  const long long P = 400;
  auto table = divisor_scan(params, 200, P);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, table.rows.size() - 1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto& row = table.rows[pick(rng)];
    for (long long p = -P; p <= P; ++p) {
      EXPECT_LE(row.mu, std::abs(small_divisor(p, row.n, params)) + 1e-12);
    }
  }
  for (const auto& row : table.rows) EXPECT_LE(row.mu, std::numbers::pi / params.T() + 1e-12);
}

TEST(DivisorScan, RecordMinimaSitAtConvergentDenominators) {
  auto table = divisor_scan(golden_d(1), 256, 1000);
  auto cf = continued_fraction(parse_enclosure("golden"), 20);
  std::vector<int> denominators;
  for (const auto& c : cf.convergents) {
    if (c.q >= 1 && c.q <= 256) denominators.push_back(c.q.convert_to<int>());
  }
  std::vector<int> records;
  for (const auto& r : table.rows) {
    if (r.record) records.push_back(r.n);
  }
  // denominators repeat q=1 at the start of the golden expansion
  denominators.erase(std::unique(denominators.begin(), denominators.end()), denominators.end());
  EXPECT_EQ(records, denominators);
}

TEST(DivisorScan, CsvHeader) {
  auto table = divisor_scan(golden_d(1), 8, 100);
  std::ostringstream out;
  table.write_csv(out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "n,p_min,mu,log_n,log_mu");
}

TEST(CheckAdmissible, RationalPeriodsAreResonant) {
  auto params = ModelParams::from_periods(2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 1, 5.5,
                                          2.0, EquationKind::nls);
  auto rep = check_admissible(params, BigInt(1000));
  EXPECT_EQ(rep.verdict, Verdict::resonant);
}

TEST(CheckAdmissible, GoldenAdmissibleAtEveryDepth) {
  auto params = golden_d(1);
  for (const char* depth : {"10", "1000000", "1000000000000000000000000000000"}) {
    auto rep = check_admissible(params, BigInt(depth));
    EXPECT_EQ(rep.verdict, Verdict::admissible_at_depth) << depth << ": " << rep.evidence;
    EXPECT_EQ(rep.precision_bits, 256);
  }
}

TEST(CheckAdmissible, LiouvilleIsSuspiciousWithWitness) {
  auto params = ModelParams::from_ratio(2.0 * std::numbers::pi, parse_enclosure("liouville:4"), 1,
                                        5.5, 2.0, EquationKind::nls);
  auto rep = check_admissible(params, BigInt(1000000));
  EXPECT_EQ(rep.verdict, Verdict::suspicious);
  ASSERT_TRUE(rep.witness.has_value());
  EXPECT_EQ(rep.witness->q, 1000000);
  EXPECT_GT(rep.witness->exponent, 3.0);
}

}  // namespace
}  // namespace hampde
