#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hampde/precision.hpp"

namespace hampde {

using Complex = std::complex<double>;

// Error hierarchy. Everything derives from Error so callers can catch broadly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when a grid is too coarse to evaluate a quantity without aliasing.
class GridError : public Error {
 public:
  using Error::Error;
};

/// An exactly (or numerically) vanishing divisor λ_{p,n} was met.
class ResonanceError : public Error {
 public:
  ResonanceError(const std::string& what, long long p, int n) : Error(what), p_(p), n_(n) {}
  [[nodiscard]] long long p() const { return p_; }
  [[nodiscard]] int n() const { return n_; }

 private:
  long long p_;
  int n_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

enum class EquationKind { nls, nlw };

inline std::string to_string(EquationKind k) { return k == EquationKind::nls ? "nls" : "nlw"; }

inline EquationKind equation_kind_from_string(const std::string& s) {
  if (s == "nls") return EquationKind::nls;
  if (s == "nlw") return EquationKind::nlw;
  throw ConfigError("unknown equation kind '" + s + "' (expected nls or nlw)");
}

/// n^d as a double for signed n.
inline double ipow(int n, int d) {
  double r = 1.0;
  for (int i = 0; i < d; ++i) r *= n;
  return r;
}

/// Hilbert-scale weight w(n) = max(|n|, 1).
inline double scale_weight(int n) { return n == 0 ? 1.0 : std::abs(static_cast<double>(n)); }

/// Operator, periods, scale and Diophantine budget of a model.
///
/// The dimensionless ratio aT/2π is stored as a high-precision enclosure
/// next to the double-precision periods; the Diophantine analysis reads the
/// enclosure, everything else reads the doubles.
class ModelParams {
 public:
  ModelParams() = default;

  /// Periods given directly. For d = 1 the ratio T/X is exact in rationals.
  static ModelParams from_periods(double X, double T, int d, double h, double r,
                                  EquationKind kind) {
    ModelParams m;
    m.X_ = X;
    m.T_ = T;
    m.d_ = d;
    m.h_ = h;
    m.r_ = r;
    m.kind_ = kind;
    m.validate();
    // aT/2π = (2π)^{d-1} T / X^d
    if (d == 1) {
      m.ratio_ = Enclosure::exact(to_rational(T) / to_rational(X));
    } else {
      HighReal two_pi = 2 * high_pi();
      HighReal value = boost::multiprecision::pow(two_pi, d - 1) * HighReal(T) /
                       boost::multiprecision::pow(HighReal(X), d);
      m.ratio_ = Enclosure::around(value);
    }
    return m;
  }

  /// Space period plus a prescribed high-precision ratio aT/2π; T is derived.
  static ModelParams from_ratio(double X, const Enclosure& ratio, int d, double h, double r,
                                EquationKind kind) {
    ModelParams m;
    m.X_ = X;
    m.d_ = d;
    m.h_ = h;
    m.r_ = r;
    m.kind_ = kind;
    m.ratio_ = ratio;
    if (X <= 0 || d < 1) throw ConfigError("period_X must be > 0 and d >= 1");
    HighReal a = boost::multiprecision::pow(2 * high_pi() / HighReal(X), d);
    m.T_ = (ratio.approx * 2 * high_pi() / a).convert_to<double>();
    m.validate();
    return m;
  }

  [[nodiscard]] double X() const { return X_; }
  [[nodiscard]] double T() const { return T_; }
  [[nodiscard]] int d() const { return d_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] double r() const { return r_; }
  [[nodiscard]] EquationKind kind() const { return kind_; }
  [[nodiscard]] const Enclosure& ratio() const { return ratio_; }

  /// Eigenvalue scale a = (2π/X)^d.
  [[nodiscard]] double a() const { return std::pow(2.0 * std::numbers::pi / X_, d_); }
  /// Smoothness level m = floor(h/d).
  [[nodiscard]] int m() const { return static_cast<int>(std::floor(h_ / d_)); }
  /// Free-flow eigenvalue a n^d.
  [[nodiscard]] double eigenvalue(int n) const { return a() * ipow(n, d_); }
  /// Small divisor λ_{p,n} = 2πp/T − a n^d.
  [[nodiscard]] double divisor(long long p, int n) const {
    return 2.0 * std::numbers::pi * static_cast<double>(p) / T_ - eigenvalue(n);
  }
  /// Regularity exponent h − d(r−1) of the periodic solution coefficients.
  [[nodiscard]] double decay_exponent() const { return h_ - d_ * (r_ - 1.0); }

  void validate() const {
    if (!(X_ > 0)) throw ConfigError("period_X must be > 0");
    if (!(T_ > 0)) throw ConfigError("period_T must be > 0");
    if (d_ < 1) throw ConfigError("operator order d must be >= 1");
    if (!(h_ > 0)) throw ConfigError("regularization order h must be > 0");
    if (!(r_ >= 2)) throw ConfigError("irrationality budget r must be >= 2");
  }

  /// Extra requirements of the periodic and Floer solvers.
  void validate_for_solvers() const {
    validate();
    if (m() < 2) {
      throw ConfigError("smoothness level m = floor(h/d) = " + std::to_string(m()) +
                        " < 2; the solvers need m >= 2");
    }
    if (!(h_ > d_ * r_)) {
      throw ConfigError("regularization h = " + std::to_string(h_) +
                        " must exceed d*r = " + std::to_string(d_ * r_));
    }
  }

 private:
  double X_ = 2.0 * std::numbers::pi;
  double T_ = 2.0 * std::numbers::pi;
  int d_ = 2;
  double h_ = 5.5;
  double r_ = 2.0;
  EquationKind kind_ = EquationKind::nls;
  Enclosure ratio_ = Enclosure::exact(Rational(1));
};

}  // namespace hampde
