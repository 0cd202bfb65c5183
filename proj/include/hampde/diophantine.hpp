#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hampde/model.hpp"
#include "hampde/precision.hpp"

namespace hampde {

struct Convergent {
  BigInt p;
  BigInt q;
};

/// Continued fraction of a number known only through a rational enclosure.
/// A quotient is emitted only when both ends of the enclosure agree on it, so
/// every emitted quotient is certified.
struct ContinuedFraction {
  std::vector<BigInt> quotients;  // a0, a1, a2, ...
  std::vector<Convergent> convergents;
  Enclosure source;
  bool terminated = false;           // exact rational reached its last quotient
  bool precision_exhausted = false;  // enclosure too wide to certify the next quotient
};

inline BigInt floor_rational(const Rational& x) {
  BigInt num = numerator(x);
  BigInt den = denominator(x);  // always positive
  BigInt q = num / den;
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

inline ContinuedFraction continued_fraction(const Enclosure& x, int depth) {
  if (depth < 1) throw RangeError("continued fraction depth must be >= 1");
  if (x.lo <= 0) throw RangeError("continued fraction input must be > 0");
  ContinuedFraction cf;
  cf.source = x;
  Rational lo = x.lo, hi = x.hi;
  BigInt p_prev = 1, q_prev = 0, p_prev2 = 0, q_prev2 = 1;
  while (static_cast<int>(cf.quotients.size()) < depth) {
    BigInt a = floor_rational(lo);
    if (floor_rational(hi) != a) {
      cf.precision_exhausted = true;
      break;
    }
    cf.quotients.push_back(a);
    BigInt p = a * p_prev + p_prev2;
    BigInt q = a * q_prev + q_prev2;
    cf.convergents.push_back({p, q});
    p_prev2 = p_prev;
    q_prev2 = q_prev;
    p_prev = p;
    q_prev = q;

    Rational flo = lo - Rational(a), fhi = hi - Rational(a);
    if (fhi == 0) {  // lo == hi == a
      cf.terminated = true;
      break;
    }
    if (flo == 0) {  // enclosure straddles the integer a; next quotient unbounded
      cf.precision_exhausted = true;
      break;
    }
    lo = Rational(1) / fhi;
    hi = Rational(1) / flo;
  }
  return cf;
}

/// Continued fraction grown until a denominator exceeds q_max.
inline ContinuedFraction continued_fraction_to_denominator(const Enclosure& x, const BigInt& q_max) {
  int depth = 16;
  for (;;) {
    auto cf = continued_fraction(x, depth);
    if (cf.terminated || cf.precision_exhausted || cf.convergents.back().q > q_max) return cf;
    depth *= 2;
  }
}

struct ProfileEntry {
  BigInt q;
  BigInt p;
  double exponent;  // −log|x − p/q| / log q; +inf on an exact hit
};

struct IrrationalityProfile {
  std::vector<ProfileEntry> entries;
  double running_max = 0.0;
  bool rational = false;             // an exact hit p/q = x with q ≤ q_max
  bool precision_exhausted = false;  // working precision ran out before q_max
  int precision_bits = kPrecisionBits;
};

inline double effective_exponent(const Enclosure& x, const Convergent& c) {
  Rational pq(c.p, c.q);
  if (x.is_exact() && x.lo == pq) return std::numeric_limits<double>::infinity();
  HighReal gap = boost::multiprecision::abs(x.approx - to_high(pq));
  return (-boost::multiprecision::log(gap) / boost::multiprecision::log(HighReal(c.q))).convert_to<double>();
}

inline IrrationalityProfile irrationality_profile(const Enclosure& x, const BigInt& q_max) {
  if (q_max < 2) throw RangeError("irrationality profile needs q_max >= 2");
  auto cf = continued_fraction_to_denominator(x, q_max);
  IrrationalityProfile prof;
  prof.precision_exhausted = cf.precision_exhausted && cf.convergents.back().q <= q_max;
  for (const auto& c : cf.convergents) {
    if (c.q > q_max) break;
    if (c.q < 2) continue;  // log q = 0
    double e = effective_exponent(x, c);
    prof.entries.push_back({c.q, c.p, e});
    prof.running_max = std::max(prof.running_max, e);
    if (std::isinf(e)) prof.rational = true;
  }
  return prof;
}

/// λ_{p,n} = 2πp/T − a n^d in double precision.
inline double small_divisor(long long p, int n, const ModelParams& params) {
  return params.divisor(p, n);
}

/// (2π/T)·|p − x n^d| with x = aT/2π in working precision. Avoids the
/// cancellation of the double-precision form for large p.
inline HighReal small_divisor_high(const BigInt& p, int n, const ModelParams& params) {
  HighReal nd = boost::multiprecision::pow(HighReal(n), params.d());
  HighReal scale = 2 * high_pi() / HighReal(params.T());
  return scale * boost::multiprecision::abs(HighReal(p) - params.ratio().approx * nd);
}

struct DivisorRow {
  int n = 0;
  long long p_min = 0;
  double mu = 0.0;
  double log_n = 0.0;
  double log_mu = 0.0;
  bool bound_ok = true;  // mu ≥ c n^{-d(r-1)} with the fitted c
  bool record = false;   // strictly below every earlier mu
};

struct DivisorTable {
  std::vector<DivisorRow> rows;
  double fitted_exponent = 0.0;
  double fitted_constant = 0.0;   // inf of mu n^{d(r-1)} over the calibration half
  double fit_intercept = 0.0;     // least-squares intercept of log mu on the record rows
  double bound_exponent = 0.0;    // d(r-1)
  double infimum_constant = 0.0;  // inf of mu n^{d(r-1)} over every row
  bool bound_holds = true;
  int precision_bits = kPrecisionBits;

  void write_csv(std::ostream& out) const {
    out << "n,p_min,mu,log_n,log_mu\n" << std::setprecision(17);
    for (const auto& r : rows) {
      out << r.n << ',' << r.p_min << ',' << r.mu << ',' << r.log_n << ',' << r.log_mu << '\n';
    }
  }
};

struct LineFit {
  double slope;
  double intercept;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double k = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = k * sxx - sx * sx;
  if (den == 0.0) return {0.0, k > 0 ? sy / k : 0.0};
  const double slope = (k * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / k};
}

/// Per-n minimal divisors over the window |p| ≤ P_scan.
///
/// The exponent is fitted on the record minima (the lower envelope of mu),
/// which is where the Diophantine law lives; the bulk of the rows sits at
/// O(1/T) and carries no information about the exponent. The constant c is
/// calibrated on n ≤ N_scan/2 and then tested on every row.
inline DivisorTable divisor_scan(const ModelParams& params, int N_scan, long long P_scan) {
  if (N_scan < 8 || P_scan < 8) throw RangeError("divisor scan needs N_scan, P_scan >= 8");
  const auto& x = params.ratio();
  const int d = params.d();
  DivisorTable table;
  table.bound_exponent = d * (params.r() - 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= N_scan; ++n) {
    BigInt nd = boost::multiprecision::pow(BigInt(n), static_cast<unsigned>(d));
    BigInt p;
    bool resonant = false;
    if (x.is_exact()) {
      Rational target = x.lo * Rational(nd);
      p = floor_rational(target + Rational(1, 2));
      resonant = (Rational(p) == target);
    } else {
      HighReal target = x.approx * HighReal(nd);
      p = boost::multiprecision::floor(target + HighReal(0.5)).convert_to<BigInt>();
      resonant = boost::multiprecision::abs(target - HighReal(p)) <= 2 * x.radius() * HighReal(nd);
    }
    if (boost::multiprecision::abs(p) > BigInt(P_scan)) {
      throw RangeError("divisor scan window too small: minimizer for n = " + std::to_string(n) +
                       " is p = " + p.str() + ", outside |p| <= " + std::to_string(P_scan));
    }
    if (resonant) {
      throw ResonanceError("exact resonance at (p,n) = (" + p.str() + "," + std::to_string(n) + ")",
                           p.convert_to<long long>(), n);
    }
    DivisorRow row;
    row.n = n;
    row.p_min = p.convert_to<long long>();
    row.mu = small_divisor_high(p, n, params).convert_to<double>();
    row.log_n = std::log(static_cast<double>(n));
    row.log_mu = std::log(row.mu);
    row.record = row.mu < best;
    best = std::min(best, row.mu);
    table.rows.push_back(row);
  }

  std::vector<double> fx, fy;
  for (const auto& r : table.rows) {
    if (r.record) {
      fx.push_back(r.log_n);
      fy.push_back(r.log_mu);
    }
  }
  if (fx.size() < 2) {
    fx.clear();
    fy.clear();
    for (const auto& r : table.rows) {
      fx.push_back(r.log_n);
      fy.push_back(r.log_mu);
    }
  }
  auto fit = least_squares(fx, fy);
  table.fitted_exponent = fit.slope;
  table.fit_intercept = fit.intercept;

  const int calib = std::max(1, N_scan / 2);
  double c = std::numeric_limits<double>::infinity();
  double c_all = std::numeric_limits<double>::infinity();
  for (const auto& r : table.rows) {
    const double scaled = r.mu * std::pow(r.n, table.bound_exponent);
    if (r.n <= calib) c = std::min(c, scaled);
    c_all = std::min(c_all, scaled);
  }
  table.fitted_constant = c;
  table.infimum_constant = c_all;
  for (auto& r : table.rows) {
    r.bound_ok = r.mu >= c * std::pow(r.n, -table.bound_exponent);
    table.bound_holds = table.bound_holds && r.bound_ok;
  }
  return table;
}

enum class Verdict { admissible_at_depth, resonant, suspicious };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::admissible_at_depth:
      return "admissible-at-depth";
    case Verdict::resonant:
      return "resonant";
    case Verdict::suspicious:
      return "suspicious";
  }
  return "?";
}

struct AdmissibilityReport {
  Verdict verdict = Verdict::admissible_at_depth;
  BigInt depth;             // largest denominator actually examined
  int precision_bits = kPrecisionBits;
  std::optional<ProfileEntry> witness;
  double max_exponent = 0.0;
  double max_excess = 0.0;  // largest exponent − budget; the witness attains it
  std::string evidence;
};

/// Finite-depth admissibility certificate for x = aT/2π.
///
/// Resonant: x equals a rational with denominator ≤ scan_depth, or the
/// enclosure is too narrow to tell x from such a rational. Suspicious: some
/// convergent with q ≤ scan_depth has exponent above r + kappa/ln q. The
/// kappa/ln q slack absorbs the bounded constant in |x − p/q| ≥ c/q^r, which
/// dominates the exponent at small q.
inline AdmissibilityReport check_admissible(const ModelParams& params, const BigInt& scan_depth,
                                            double kappa = std::numbers::ln10) {
  const auto& x = params.ratio();
  auto cf = continued_fraction_to_denominator(x, std::max(scan_depth, BigInt(2)));
  AdmissibilityReport rep;
  rep.depth = 0;
  for (const auto& c : cf.convergents) {
    if (c.q > scan_depth) break;
    rep.depth = c.q;
    Rational pq(c.p, c.q);
    if (x.lo <= pq && pq <= x.hi) {
      rep.verdict = Verdict::resonant;
      rep.witness = ProfileEntry{c.q, c.p, std::numeric_limits<double>::infinity()};
      rep.evidence = "aT/2pi = " + c.p.str() + "/" + c.q.str() +
                     (x.is_exact() ? " exactly" : " within working precision");
      return rep;
    }
    if (c.q < 2) continue;
    double e = effective_exponent(x, c);
    rep.max_exponent = std::max(rep.max_exponent, e);
    const double budget = params.r() + kappa / std::log(c.q.convert_to<double>());
    if (e > budget && e - budget > rep.max_excess) {
      rep.verdict = Verdict::suspicious;
      rep.max_excess = e - budget;
      rep.witness = ProfileEntry{c.q, c.p, e};
      rep.evidence = "convergent " + c.p.str() + "/" + c.q.str() + " has exponent " +
                     std::to_string(e) + " > budget " + std::to_string(budget);
    }
  }
  if (rep.verdict == Verdict::admissible_at_depth) {
    rep.evidence = "all convergents with q <= " + rep.depth.str() + " within budget r = " +
                   std::to_string(params.r());
    if (cf.precision_exhausted && cf.convergents.back().q <= scan_depth) {
      rep.evidence += " (working precision exhausted before the requested depth)";
    }
  }
  return rep;
}

}  // namespace hampde
