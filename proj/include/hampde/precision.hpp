#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hampde {

/// Working precision of every Diophantine computation, in bits.
inline constexpr int kPrecisionBits = 256;

using HighReal = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<kPrecisionBits,
                                         boost::multiprecision::digit_base_2>,
    boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline HighReal high_pi() {
  static const HighReal pi = boost::multiprecision::default_ops::get_constant_pi<
      HighReal::backend_type>();
  return pi;
}

inline HighReal to_high(const Rational& q) {
  return HighReal(numerator(q)) / HighReal(denominator(q));
}

/// Exact binary value of a finite high-precision float as a rational.
inline Rational to_rational(const HighReal& x) {
  if (x == 0) return Rational(0);
  int exponent = 0;
  HighReal mantissa = boost::multiprecision::frexp(x, &exponent);
  // scale the mantissa to an integer; the format carries kPrecisionBits bits
  HighReal scaled = boost::multiprecision::ldexp(mantissa, kPrecisionBits + 8);
  BigInt integral = scaled.convert_to<BigInt>();
  int shift = exponent - (kPrecisionBits + 8);
  Rational r(integral);
  if (shift >= 0) {
    r *= Rational(BigInt(1) << shift);
  } else {
    r /= Rational(BigInt(1) << (-shift));
  }
  return r;
}

/// Exact rational value of a finite double.
inline Rational to_rational(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value has no rational form");
  return to_rational(HighReal(x));
}

/// Closed rational interval known to contain a real number. Degenerate
/// intervals (lo == hi) represent exactly known rationals.
struct Enclosure {
  Rational lo;
  Rational hi;
  HighReal approx;  // best available approximation, inside [lo, hi]

  static Enclosure exact(const Rational& q) { return {q, q, to_high(q)}; }

  /// Interval of half-width |x|·2^{-(kPrecisionBits - guard_bits)} around x.
  static Enclosure around(const HighReal& x, int guard_bits = 16) {
    Rational centre = to_rational(x);
    HighReal rad = boost::multiprecision::ldexp(boost::multiprecision::abs(x),
                                                -(kPrecisionBits - guard_bits));
    Rational r = to_rational(rad);
    return {centre - r, centre + r, x};
  }

  [[nodiscard]] bool is_exact() const { return lo == hi; }
  [[nodiscard]] HighReal radius() const { return to_high(Rational((hi - lo) / 2)); }
  [[nodiscard]] double to_double() const { return approx.convert_to<double>(); }
};

/// Exact value of a finite continued fraction [a0; a1, a2, ...].
inline Rational rational_from_quotients(const std::vector<BigInt>& quotients) {
  if (quotients.empty()) throw std::invalid_argument("empty quotient schedule");
  Rational value(quotients.back());
  for (auto it = quotients.rbegin() + 1; it != quotients.rend(); ++it) {
    value = Rational(*it) + Rational(1) / value;
  }
  return value;
}

/// Parses a named or literal real number into an enclosure:
///   "golden", "silver", "sqrt2", "sqrt3", "e"
///   "p/q"                  exact rational
///   "liouville:K"          Σ_{k=1}^{K} 10^{-k!} (exact rational)
///   "cf:a0,a1,a2,..."      exact finite continued fraction
///   any decimal literal    parsed at working precision
inline Enclosure parse_enclosure(const std::string& text) {
  using boost::multiprecision::sqrt;
  if (text == "golden") return Enclosure::around((1 + sqrt(HighReal(5))) / 2);
  if (text == "silver") return Enclosure::around(1 + sqrt(HighReal(2)));
  if (text == "sqrt2") return Enclosure::around(sqrt(HighReal(2)));
  if (text == "sqrt3") return Enclosure::around(sqrt(HighReal(3)));
  if (text == "e") return Enclosure::around(boost::multiprecision::exp(HighReal(1)));
  if (text.rfind("liouville:", 0) == 0) {
    int terms = std::stoi(text.substr(10));
    if (terms < 1 || terms > 6) throw std::invalid_argument("liouville terms must be in [1,6]");
    Rational sum(0);
    BigInt factorial = 1;
    for (int k = 1; k <= terms; ++k) {
      factorial *= k;
      BigInt pow10 = boost::multiprecision::pow(BigInt(10), factorial.convert_to<unsigned>());
      sum += Rational(1) / Rational(pow10);
    }
    return Enclosure::exact(sum);
  }
  if (text.rfind("cf:", 0) == 0) {
    std::vector<BigInt> q;
    std::string rest = text.substr(3);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      std::size_t next = rest.find(',', pos);
      std::string item = rest.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      if (!item.empty()) q.emplace_back(item);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return Enclosure::exact(rational_from_quotients(q));
  }
  if (auto slash = text.find('/'); slash != std::string::npos) {
    BigInt num(text.substr(0, slash));
    BigInt den(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
    return Enclosure::exact(Rational(num, den));
  }
  try {
    return Enclosure::around(HighReal(text));
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse real number '" + text + "'");
  }
}

}  // namespace hampde
