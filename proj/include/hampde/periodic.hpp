#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "hampde/diophantine.hpp"
#include "hampde/dynamics.hpp"
#include "hampde/krylov.hpp"
#include "hampde/nonlinearity.hpp"
#include "hampde/spectral.hpp"

namespace hampde {

struct SolverConfig {
  double newton_tol = 1e-10;
  int max_newton = 50;
  double krylov_tol = 1e-6;
  int krylov_max = 200;
  double fd_epsilon = 1e-6;
  int picard_warmup = 0;
  int line_search_halvings = 8;
  int stall_limit = 5;
};

/// Smallest |λ_{p,n}| over |p| ≤ P, 1 ≤ |n| ≤ N; throws on an exact (or
/// working-precision) resonance.
inline double window_min_divisor(const ModelParams& params, int P, int N) {
  const auto& x = params.ratio();
  double smallest = std::numeric_limits<double>::infinity();
  for (int n = -N; n <= N; ++n) {
    if (n == 0) continue;
    BigInt nd = boost::multiprecision::pow(BigInt(n), static_cast<unsigned>(params.d()));
    BigInt p;
    bool resonant;
    if (x.is_exact()) {
      Rational target = x.lo * Rational(nd);
      p = floor_rational(target + Rational(1, 2));
      resonant = Rational(p) == target;
    } else {
      HighReal target = x.approx * HighReal(nd);
      p = boost::multiprecision::floor(target + HighReal(0.5)).convert_to<BigInt>();
      resonant = boost::multiprecision::abs(target - HighReal(p)) <= 2 * x.radius() * boost::multiprecision::abs(HighReal(nd));
    }
    if (resonant && boost::multiprecision::abs(p) <= P) {
      throw ResonanceError("resonant mode in window: lambda(" + p.str() + "," + std::to_string(n) + ") = 0",
                           p.convert_to<long long>(), n);
    }
    // the nearest admissible p is the clamped minimizer
    BigInt clamped = std::clamp(p, BigInt(-P), BigInt(P));
    smallest = std::min(smallest, std::abs(params.divisor(clamped.convert_to<long long>(), n)));
  }
  return smallest;
}

/// Harmonic-balance formulation of the twisted-periodic problem
/// λ_{p,n} Û(p,n) = (∇G)ˆ(p,n) on |p| ≤ P, 1 ≤ |n| ≤ N.
class HBProblem {
 public:
  HBProblem(const Nonlinearity& nl, int P, int N, SolverConfig cfg = {})
      : nl_(&nl), P_(P), N_(N), cfg_(cfg) {
    if (P < 0 || N < 1) throw RangeError("harmonic balance needs P >= 0 and N >= 1");
    min_divisor_ = window_min_divisor(nl.params(), P, N);
  }

  [[nodiscard]] const Nonlinearity& nonlinearity() const { return *nl_; }
  [[nodiscard]] const ModelParams& params() const { return nl_->params(); }
  [[nodiscard]] int P() const { return P_; }
  [[nodiscard]] int N() const { return N_; }
  [[nodiscard]] const SolverConfig& config() const { return cfg_; }
  [[nodiscard]] double min_divisor() const { return min_divisor_; }
  [[nodiscard]] int temporal_grid() const { return 4 * (2 * P_ + 1); }
  [[nodiscard]] double divisor(int p, int n) const { return params().divisor(p, n); }

  /// Twisted coefficients of t ↦ ∇G_t(u(t)) with the n = 0 line removed.
  ///
  /// u(t) = φ^A_t v(t) is the physical slice, and ∇G_t(v) = φ^A_{−t}∇F_t(u),
  /// so the twisted coefficients of ∇G are the physical ones of ∇F_t(u(t)).
  [[nodiscard]] SpaceTimeField gradient_coeffs(const SpaceTimeField& U) const {
    const int M = temporal_grid();
    auto slices = periodic_slices(U, M);
    const double T = params().T();
    for (int j = 0; j < M; ++j) {
      auto& s = slices[static_cast<std::size_t>(j)];
      s = nl_->grad(s, T * j / M);
    }
    auto g = from_periodic_slices(slices, P_, Gauge::twisted);
    for (int p = -P_; p <= P_; ++p) g(p, 0) = Complex{};
    return g;
  }

  [[nodiscard]] SpaceTimeField residual(const SpaceTimeField& U) const {
    check(U);
    auto R = gradient_coeffs(U);
    for (int p = -P_; p <= P_; ++p) {
      for (int n = -N_; n <= N_; ++n) {
        R(p, n) = n == 0 ? Complex{} : divisor(p, n) * U(p, n) - R(p, n);
      }
    }
    return R;
  }

  /// One Picard step Û ← (∇G)ˆ/λ.
  [[nodiscard]] SpaceTimeField picard(const SpaceTimeField& U) const {
    auto g = gradient_coeffs(U);
    for (int p = -P_; p <= P_; ++p) {
      for (int n = -N_; n <= N_; ++n) g(p, n) = n == 0 ? Complex{} : g(p, n) / divisor(p, n);
    }
    return g;
  }

  [[nodiscard]] std::size_t unknowns() const { return static_cast<std::size_t>(2 * (2 * P_ + 1) * (2 * N_)); }

  [[nodiscard]] RealVector pack(const SpaceTimeField& U) const {
    RealVector v;
    v.reserve(unknowns());
    for (int p = -P_; p <= P_; ++p) {
      for (int n = -N_; n <= N_; ++n) {
        if (n == 0) continue;
        v.push_back(U(p, n).real());
        v.push_back(U(p, n).imag());
      }
    }
    return v;
  }

  [[nodiscard]] SpaceTimeField unpack(const RealVector& v) const {
    SpaceTimeField U(P_, N_, Gauge::twisted);
    std::size_t i = 0;
    for (int p = -P_; p <= P_; ++p) {
      for (int n = -N_; n <= N_; ++n) {
        if (n == 0) continue;
        U(p, n) = Complex(v[i], v[i + 1]);
        i += 2;
      }
    }
    return U;
  }

  /// Central-difference directional derivative of U ↦ (∇G)ˆ.
  [[nodiscard]] SpaceTimeField gradient_derivative(const SpaceTimeField& U, const SpaceTimeField& V) const {
    const double vn = V.norm();
    if (vn == 0.0) return SpaceTimeField(P_, N_, Gauge::twisted);
    const double h = cfg_.fd_epsilon * std::max(1.0, U.norm()) / vn;
    auto d = gradient_coeffs(U + h * V) - gradient_coeffs(U - h * V);
    return (1.0 / (2.0 * h)) * d;
  }

  /// Sampled sup ‖d(∇G)ˆ[V]‖/‖V‖ over random directions.
  [[nodiscard]] double derivative_bound(const SpaceTimeField& U, int samples, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    double sup = 0.0;
    for (int k = 0; k < samples; ++k) {
      SpaceTimeField V(P_, N_, Gauge::twisted);
      for (int p = -P_; p <= P_; ++p) {
        for (int n = -N_; n <= N_; ++n) {
          if (n != 0) V(p, n) = Complex(g(rng), g(rng)) / (scale_weight(n) * scale_weight(n) * scale_weight(p));
        }
      }
      sup = std::max(sup, gradient_derivative(U, V).norm() / V.norm());
    }
    return sup;
  }

 private:
  void check(const SpaceTimeField& U) const {
    if (U.gauge() != Gauge::twisted) throw ConfigError("harmonic balance works in the twisted gauge");
    if (U.P() != P_ || U.N() != N_) throw RangeError("field window does not match the problem window");
  }

  const Nonlinearity* nl_;
  int P_;
  int N_;
  SolverConfig cfg_;
  double min_divisor_ = 0.0;
};

/// Closed-form solution Û = ĉ/λ of the linear twisted problem with ∇F_t = c_t.
/// The physical coefficients of c are its twisted coefficients after φ^A_{−t}.
inline SpaceTimeField linear_forced_solve(const SpaceTimeField& c, const ModelParams& params, int P, int N) {
  window_min_divisor(params, P, N);
  const auto phys = gauge_transform(c, Gauge::physical);
  SpaceTimeField U(P, N, Gauge::twisted);
  for (int p = -P; p <= P; ++p) {
    for (int n = -N; n <= N; ++n) {
      if (n == 0 || std::abs(p) > phys.P() || std::abs(n) > phys.N()) continue;
      U(p, n) = phys(p, n) / params.divisor(p, n);
    }
  }
  return U;
}

/// Second-order wave form φ̈ − φ_xx = c of the linear forced problem:
/// φ̂(p,n) = ĉ(p,n)·(T²/(2πn)²)/((T/X − p/n)(T/X + p/n)), coefficients of
/// e^{i(2πpt/T + 2πnx/X)}.
inline SpaceTimeField linear_wave_solve(const SpaceTimeField& c, double T, double X) {
  const int P = c.P(), N = c.N();
  SpaceTimeField phi(P, N, Gauge::physical);
  const double ratio = T / X;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int p = -P; p <= P; ++p) {
    for (int n = -N; n <= N; ++n) {
      const Complex cc = c(p, n);
      if (cc == Complex{}) continue;
      double denom;
      Complex value;
      if (n == 0) {
        // −(2πp/T)² φ̂ = ĉ
        denom = -std::pow(two_pi * p / T, 2);
        value = cc / denom;
      } else {
        const double q = static_cast<double>(p) / n;
        denom = (ratio - q) * (ratio + q);
        value = cc * (T * T / std::pow(two_pi * n, 2)) / denom;
      }
      if (denom == 0.0) throw ResonanceError("wave resonance at (" + std::to_string(p) + "," + std::to_string(n) + ")", p, n);
      phi(p, n) = value;
    }
  }
  return phi;
}

// --- decay audit --------------------------------------------------------------

struct DecayRow {
  int p;
  int n;
  double abs;
  double statistic;  // |Û|·w(n)^{h−d(r−1)}·max(|p|,1)^m
};

struct DecayAudit {
  std::vector<DecayRow> rows;
  std::vector<double> shell_max;  // shell j: max(|p|,|n|) in [2^j, 2^{j+1}), shell 0 also holds 0
  bool monotone_tail = true;
  double regularity_norm = 0.0;  // sup over the t-grid of |u(t)|_{h−d(r−1)−1/2}
  double regularity_index = 0.0;
  double noise_floor = 0.0;      // |Û| below this count as zero

  void write_csv(std::ostream& out) const {
    out << "p,n,abs,statistic\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.p << ',' << r.n << ',' << r.abs << ',' << r.statistic << '\n';
  }
};

inline int dyadic_shell(int k) {
  int j = 0;
  while ((2 << j) <= k) ++j;
  return j;
}

/// Decay statistics of a space-time field.
///
/// Coefficients below relative_floor·max|Û| are treated as zero: the weights
/// reach 10^10 at desk-scale windows and would otherwise amplify rounding
/// noise into spurious growth.
inline DecayAudit decay_audit(const SpaceTimeField& U, const ModelParams& params, double relative_floor = 1e-14,
                              double slack = 0.10) {
  DecayAudit audit;
  const double sigma = params.decay_exponent();
  const int m = params.m();
  double biggest = 0.0;
  for (int p = -U.P(); p <= U.P(); ++p) {
    for (int n = -U.N(); n <= U.N(); ++n) biggest = std::max(biggest, std::abs(U(p, n)));
  }
  audit.noise_floor = relative_floor * biggest;
  audit.shell_max.assign(static_cast<std::size_t>(dyadic_shell(std::max(U.P(), U.N())) + 1), 0.0);
  for (int p = -U.P(); p <= U.P(); ++p) {
    for (int n = -U.N(); n <= U.N(); ++n) {
      const double a = std::abs(U(p, n));
      const double stat = a <= audit.noise_floor ? 0.0 : a * std::pow(scale_weight(n), sigma) * std::pow(scale_weight(p), m);
      audit.rows.push_back({p, n, a, stat});
      auto& shell = audit.shell_max[static_cast<std::size_t>(dyadic_shell(std::max(std::abs(p), std::abs(n))))];
      shell = std::max(shell, stat);
    }
  }
  for (std::size_t j = 2; j + 1 < audit.shell_max.size(); ++j) {
    if (audit.shell_max[j + 1] > (1.0 + slack) * audit.shell_max[j]) audit.monotone_tail = false;
  }
  audit.regularity_index = sigma - 0.5;
  const auto slices = periodic_slices(U, 4 * (2 * U.P() + 1));
  for (const auto& s : slices) audit.regularity_norm = std::max(audit.regularity_norm, scale_norm(s, audit.regularity_index));
  return audit;
}

// --- counterexample -----------------------------------------------------------

/// Quotients a_0 = 1, a_{k+1} = max(2, q_k^k): the partial quotients outgrow
/// every fixed power of the denominators, so |x − p_k/q_k| ≈ q_k^{−(k+2)}.
inline std::vector<BigInt> liouville_schedule(int depth) {
  if (depth < 1) throw RangeError("schedule depth must be >= 1");
  std::vector<BigInt> a{BigInt(1)};
  BigInt q_prev = 0, q = 1;
  for (int k = 0; static_cast<int>(a.size()) < depth; ++k) {
    BigInt next = boost::multiprecision::pow(q, static_cast<unsigned>(k));
    if (next < 2) next = 2;
    a.push_back(next);
    BigInt q_next = next * q + q_prev;
    q_prev = q;
    q = q_next;
  }
  return a;
}

/// Quotients a_k = 10^k (a_0 = 1).
inline std::vector<BigInt> powers_of_ten_schedule(int depth) {
  std::vector<BigInt> a{BigInt(1)};
  for (int k = 1; k < depth; ++k) a.push_back(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(k)));
  return a;
}

inline std::vector<BigInt> golden_schedule(int depth) { return std::vector<BigInt>(static_cast<std::size_t>(depth), BigInt(1)); }

struct CounterexampleMode {
  BigInt p;
  BigInt q;
  Rational scaled_forcing;  // ĉ(p,q)/(2π/T)² = x²q² − p², exact
  Rational solution;        // φ̂(p,q), exact
  double forcing = 0.0;     // ĉ(p,q) with X = 2π, so (2π/T)² = 1/x²
  double exponent = 0.0;    // −log|ĉ|/log q
};

struct Counterexample {
  Rational ratio;  // T/X
  std::vector<CounterexampleMode> modes;  // conjugate partners (−p,−q) carry the same values
  bool smooth = false;       // exponents increase and the last reaches min_exponent
  bool solution_is_one = false;
};

/// Forcing concentrated on the convergents of T/X that makes the formal
/// solution coefficient exactly 1 along the convergents.
inline Counterexample counterexample_generate(const std::vector<BigInt>& schedule, double min_exponent = 3.0) {
  if (schedule.empty()) throw RangeError("empty quotient schedule");
  Counterexample ce;
  ce.ratio = rational_from_quotients(schedule);
  auto cf = continued_fraction(Enclosure::exact(ce.ratio), static_cast<int>(schedule.size()) + 1);
  if (cf.convergents.size() < 3) throw RangeError("counterexample needs at least 3 convergents");
  const Rational x2 = ce.ratio * ce.ratio;
  // the last convergent is T/X itself, where the divisor vanishes
  for (std::size_t k = 0; k + 1 < cf.convergents.size(); ++k) {
    const auto& c = cf.convergents[k];
    if (c.q < 2) continue;
    CounterexampleMode mode;
    mode.p = c.p;
    mode.q = c.q;
    const Rational q2(c.q * c.q), p2(c.p * c.p);
    mode.scaled_forcing = x2 * q2 - p2;
    // φ̂ = ĉ (T²/(2πq)²)/((x − p/q)(x + p/q)) = (ĉ/K)/(x²q² − p²)
    mode.solution = mode.scaled_forcing / (x2 * q2 - p2);
    const HighReal forcing = to_high(mode.scaled_forcing) / to_high(x2);
    mode.forcing = forcing.convert_to<double>();
    mode.exponent = (-boost::multiprecision::log(boost::multiprecision::abs(forcing)) /
                     boost::multiprecision::log(HighReal(c.q))).convert_to<double>();
    ce.modes.push_back(mode);
  }
  if (ce.modes.size() < 2) throw RangeError("counterexample needs at least 3 convergents");
  ce.solution_is_one = std::all_of(ce.modes.begin(), ce.modes.end(), [](const auto& m) { return m.solution == 1; });
  ce.smooth = ce.modes.back().exponent >= min_exponent;
  for (std::size_t k = 1; k < ce.modes.size(); ++k) {
    if (!(ce.modes[k].exponent > ce.modes[k - 1].exponent)) ce.smooth = false;
  }
  return ce;
}

// --- Newton–Krylov solve ------------------------------------------------------

struct HBResult {
  SpaceTimeField U;         // twisted gauge
  SpaceTimeField physical;  // same coefficients, physical gauge
  std::vector<double> residual_history;
  int newton_iterations = 0;
  int krylov_iterations = 0;
  double residual = 0.0;
  double min_divisor = 0.0;
  bool trivial = false;
};

/// Picard contraction estimate sup‖d∇G‖/min|λ| at U.
inline double contraction_estimate(const HBProblem& prob, const SpaceTimeField& U, int samples = 4,
                                   std::uint64_t seed = 7) {
  return prob.derivative_bound(U, samples, seed) / prob.min_divisor();
}

/// Damped Newton–Krylov solve of the harmonic-balance equations.
/// Without an initial field, starts from the linear seed Û = (∇G(0))ˆ/λ.
inline HBResult hb_solve(const HBProblem& prob, std::optional<SpaceTimeField> initial = {}) {
  const auto& cfg = prob.config();
  const int P = prob.P(), N = prob.N();
  HBResult res;
  res.min_divisor = prob.min_divisor();

  const SpaceTimeField zero(P, N, Gauge::twisted);
  SpaceTimeField U = initial ? *initial : prob.picard(zero);
  if (U.gauge() != Gauge::twisted) U = gauge_transform(U, Gauge::twisted);
  for (int k = 0; k < cfg.picard_warmup; ++k) U = prob.picard(U);

  auto R = prob.residual(U);
  double rn = R.norm();
  res.residual_history.push_back(rn);

  double krylov_tol = cfg.krylov_tol;
  int stalls = 0;
  while (rn > cfg.newton_tol) {
    if (res.newton_iterations >= cfg.max_newton) {
      throw ConvergenceError("Newton did not converge in " + std::to_string(cfg.max_newton) +
                             " iterations; residual " + std::to_string(rn) + ", smallest |lambda| " +
                             std::to_string(prob.min_divisor()) + ", contraction estimate " +
                             std::to_string(contraction_estimate(prob, U)));
    }
    ++res.newton_iterations;
    // right preconditioning with diag(1/λ): solve (J D) y = −R, step = D y
    auto scale = [&](SpaceTimeField V) {
      for (int p = -P; p <= P; ++p) {
        for (int n = -N; n <= N; ++n) V(p, n) = n == 0 ? Complex{} : V(p, n) / prob.divisor(p, n);
      }
      return V;
    };
    LinearOperator op = [&](const RealVector& y, RealVector& out) {
      const auto V = scale(prob.unpack(y));
      auto JV = prob.gradient_derivative(U, V);
      for (int p = -P; p <= P; ++p) {
        for (int n = -N; n <= N; ++n) JV(p, n) = n == 0 ? Complex{} : prob.divisor(p, n) * V(p, n) - JV(p, n);
      }
      out = prob.pack(JV);
    };
    RealVector rhs = prob.pack(R);
    for (double& v : rhs) v = -v;
    auto sol = gmres(op, rhs, krylov_tol, cfg.krylov_max, cfg.krylov_max);
    res.krylov_iterations += sol.iterations;
    const auto step_field = scale(prob.unpack(sol.x));

    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k <= cfg.line_search_halvings; ++k, alpha /= 2) {
      auto trial = U + alpha * step_field;
      auto Rt = prob.residual(trial);
      const double rt = Rt.norm();
      if (rt < rn) {
        U = std::move(trial);
        R = std::move(Rt);
        rn = rt;
        accepted = true;
        break;
      }
    }
    res.residual_history.push_back(rn);
    if (accepted) {
      stalls = 0;
    } else {
      krylov_tol /= 10;
      if (++stalls >= cfg.stall_limit) {
        throw ConvergenceError("Newton stagnated at residual " + std::to_string(rn) + "; smallest |lambda| " +
                               std::to_string(prob.min_divisor()) + ", contraction estimate " +
                               std::to_string(contraction_estimate(prob, U)));
      }
    }
  }
  res.trivial = U.norm() == 0.0;
  res.residual = rn;
  res.U = U;
  res.physical = gauge_transform(U, Gauge::physical);
  return res;
}

/// |φ^G_T v(0) − φ^A_{−T} v(0)|₀ for the twisted trajectory started at the
/// t = 0 slice of U.
inline double flow_round_trip_defect(const SpaceTimeField& U, const HamiltonianSystem& sys, int steps) {
  const auto& params = sys.params();
  const auto v0 = evaluate(U, 0.0, params);
  const auto vT = twisted_flow_map(v0, 0.0, params.T(), sys, steps);
  return scale_norm(vT - free_flow(v0, -params.T(), params), 0.0);
}

}  // namespace hampde
