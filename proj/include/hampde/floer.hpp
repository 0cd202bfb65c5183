#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "hampde/periodic.hpp"

namespace hampde {

/// The s-cutoff in front of ∇G in the Floer equation.
///
/// Two-sided φ_τ: 0 for s ≤ −1 and s ≥ 2τ+1, 1 on [0, 2τ], cubic smoothstep
/// ramps in between (slope at most 3/2). One-sided φ: the left ramp only.
struct CutoffProfile {
  double tau = 0.0;
  bool one_sided = false;

  static CutoffProfile two_sided(double tau) {
    if (!(tau >= 0)) throw RangeError("cutoff parameter tau must be >= 0");
    return {tau, false};
  }
  static CutoffProfile right_open() { return {0.0, true}; }

  [[nodiscard]] double operator()(double s) const {
    if (s <= -1.0) return 0.0;
    if (s < 0.0) return smoothstep(s + 1.0);
    if (one_sided || s <= 2.0 * tau) return 1.0;
    if (s < 2.0 * tau + 1.0) return smoothstep(2.0 * tau + 1.0 - s);
    return 0.0;
  }
  [[nodiscard]] double derivative(double s) const {
    if (s <= -1.0 || (s >= 0.0 && (one_sided || s <= 2.0 * tau))) return 0.0;
    if (s < 0.0) return smoothstep_slope(s + 1.0);
    if (s < 2.0 * tau + 1.0) return -smoothstep_slope(2.0 * tau + 1.0 - s);
    return 0.0;
  }
  /// Right end of the support, +∞ for the one-sided profile.
  [[nodiscard]] double support_end() const {
    return one_sided ? std::numeric_limits<double>::infinity() : 2.0 * tau + 1.0;
  }

 private:
  static double smoothstep(double x) { return x * x * (3.0 - 2.0 * x); }
  static double smoothstep_slope(double x) { return 6.0 * x * (1.0 - x); }
};

namespace detail {

// ∫_0^h e^{μτ} dτ and ∫_0^h e^{μτ} τ/h dτ, with series near μh = 0
inline std::pair<double, double> exp_moments(double mu, double h) {
  const double z = mu * h;
  if (std::abs(z) < 1e-3) {
    const double i0 = h * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0);
    const double i1 = h * (0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0);
    return {i0, i1};
  }
  const double em1 = std::expm1(z);
  return {em1 / mu, (std::exp(z) * z - em1) / (mu * z)};
}

}  // namespace detail

/// Bounded solution of w′ = λw + f on a uniform grid s_j = s_0 + j·ds.
///
/// Each cell is integrated exactly for the linear interpolant of f, in the
/// contracting direction: forward for λ < 0, backward for λ > 0. Outside the
/// grid f is taken as constant, so the far boundary value is −f/λ, which is
/// 0 when f vanishes there.
inline std::vector<Complex> modewise_bvp(double lambda, const std::vector<Complex>& f, double ds) {
  if (lambda == 0.0) throw RangeError("modewise_bvp: lambda = 0 is a resonant mode");
  if (!(ds > 0)) throw RangeError("modewise_bvp: grid step must be > 0");
  const std::size_t J = f.size();
  std::vector<Complex> w(J);
  if (J == 0) return w;
  if (lambda < 0) {
    const auto [i0, i1] = detail::exp_moments(lambda, ds);
    const double decay = std::exp(lambda * ds);
    w[0] = -f[0] / lambda;
    for (std::size_t j = 0; j + 1 < J; ++j) {
      // w_{j+1} = e^{λh} w_j + ∫_0^h e^{λτ} f(s_{j+1} − τ) dτ
      w[j + 1] = decay * w[j] + f[j + 1] * i0 + (f[j] - f[j + 1]) * i1;
    }
  } else {
    const auto [i0, i1] = detail::exp_moments(-lambda, ds);
    const double decay = std::exp(-lambda * ds);
    w[J - 1] = -f[J - 1] / lambda;
    for (std::size_t j = J - 1; j > 0; --j) {
      // w_{j−1} = e^{−λh} w_j − ∫_0^h e^{−λτ} f(s_{j−1} + τ) dτ
      w[j - 1] = decay * w[j] - (f[j - 1] * i0 + (f[j] - f[j - 1]) * i1);
    }
  }
  return w;
}

inline double sup_abs(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

struct FloerConfig {
  double s_min = -8.0;
  std::optional<double> s_max;  // default 2τ+8, or 40 for the one-sided profile
  double ds = 0.05;
  int max_picard = 50;
  double tol = 1e-8;
  double plateau = 2.0;  // width of the averaging window for the right asymptote
};

struct FloerCurve {
  std::vector<double> s;
  std::vector<SpaceTimeField> slices;  // twisted gauge
  CutoffProfile profile;
  bool converged = false;
  int iterations = 0;
  std::vector<double> change_history;
  double contraction_estimate = 0.0;  // sup‖d∇G‖·√2/min|λ|
  bool contractive = true;
  long long sup_bound_checks = 0;
  long long sup_bound_violations = 0;
  double sup_bound_worst_ratio = 0.0;  // max over modes and iterates of sup|w|·|λ|/(√2 sup|f|)
  SpaceTimeField left_asymptote;
  SpaceTimeField right_asymptote;  // plateau average

  [[nodiscard]] double ds() const { return s.size() > 1 ? s[1] - s[0] : 0.0; }

  /// CSV rows (s, p, n, re, im) with magnitude above the threshold.
  void write_csv(std::ostream& out, double threshold = 1e-12) const {
    out << "s,p,n,re,im\n" << std::setprecision(17);
    for (std::size_t j = 0; j < s.size(); ++j) {
      const auto& U = slices[j];
      for (int p = -U.P(); p <= U.P(); ++p) {
        for (int n = -U.N(); n <= U.N(); ++n) {
          const Complex z = U(p, n);
          if (std::abs(z) > threshold) out << s[j] << ',' << p << ',' << n << ',' << z.real() << ',' << z.imag() << '\n';
        }
      }
    }
  }
};

/// Average of the slices with s in [lo, hi].
inline SpaceTimeField average_slices(const FloerCurve& curve, double lo, double hi) {
  SpaceTimeField acc(curve.slices.front().P(), curve.slices.front().N(), Gauge::twisted);
  int count = 0;
  for (std::size_t j = 0; j < curve.s.size(); ++j) {
    if (curve.s[j] >= lo - 1e-12 && curve.s[j] <= hi + 1e-12) {
      acc += curve.slices[j];
      ++count;
    }
  }
  if (count == 0) throw RangeError("averaging window contains no grid points");
  acc *= Complex(1.0 / count);
  return acc;
}

/// Picard iteration for ∂_s ũ + i∂_t ũ + φ(s)∇G_t(ũ) = 0 in twisted
/// coefficients, W′ = λW + f with f = −φ(s)·(∇G)ˆ.
inline FloerCurve floer_iterate(const HBProblem& prob, const CutoffProfile& profile, const FloerConfig& cfg = {}) {
  const int P = prob.P(), N = prob.N();
  const double s_max = cfg.s_max ? *cfg.s_max : (profile.one_sided ? 40.0 : 2.0 * profile.tau + 8.0);
  if (!(s_max > cfg.s_min) || !(cfg.ds > 0)) throw RangeError("floer s-grid is empty");
  const auto J = static_cast<std::size_t>(std::llround((s_max - cfg.s_min) / cfg.ds)) + 1;

  FloerCurve curve;
  curve.profile = profile;
  curve.s.resize(J);
  for (std::size_t j = 0; j < J; ++j) curve.s[j] = cfg.s_min + static_cast<double>(j) * cfg.ds;
  curve.slices.assign(J, SpaceTimeField(P, N, Gauge::twisted));
  std::vector<double> weight(J);
  for (std::size_t j = 0; j < J; ++j) weight[j] = profile(curve.s[j]);

  std::vector<SpaceTimeField> forcing(J, SpaceTimeField(P, N, Gauge::twisted));
  std::vector<Complex> f(J);
  while (curve.iterations < cfg.max_picard) {
    ++curve.iterations;
    for (std::size_t j = 0; j < J; ++j) {
      if (weight[j] == 0.0) {
        forcing[j] = SpaceTimeField(P, N, Gauge::twisted);
      } else {
        forcing[j] = prob.gradient_coeffs(curve.slices[j]);
        forcing[j] *= Complex(-weight[j]);
      }
    }
    double change = 0.0;
    std::vector<double> slice_change(J, 0.0);
    for (int p = -P; p <= P; ++p) {
      for (int n = -N; n <= N; ++n) {
        if (n == 0) continue;
        for (std::size_t j = 0; j < J; ++j) f[j] = forcing[j](p, n);
        const double lambda = prob.divisor(p, n);
        const auto w = modewise_bvp(lambda, f, cfg.ds);
        const double fsup = sup_abs(f);
        const double wsup = sup_abs(w);
        ++curve.sup_bound_checks;
        if (fsup > 0.0) {
          const double ratio = wsup * std::abs(lambda) / (std::sqrt(2.0) * fsup);
          curve.sup_bound_worst_ratio = std::max(curve.sup_bound_worst_ratio, ratio);
          if (ratio > 1.0 + 1e-12) ++curve.sup_bound_violations;
        } else if (wsup > 0.0) {
          ++curve.sup_bound_violations;
        }
        for (std::size_t j = 0; j < J; ++j) {
          slice_change[j] += std::norm(w[j] - curve.slices[j](p, n));
          curve.slices[j](p, n) = w[j];
        }
      }
    }
    for (double c : slice_change) change = std::max(change, std::sqrt(c));
    curve.change_history.push_back(change);
    if (change <= cfg.tol) {
      curve.converged = true;
      break;
    }
  }
  // sup‖d∇G‖ sampled at the far end of the curve, where the field is largest
  curve.contraction_estimate = contraction_estimate(prob, curve.slices.back()) * std::sqrt(2.0);
  curve.contractive = curve.contraction_estimate < 1.0;
  if (!curve.converged) {
    throw ConvergenceError("Floer Picard iteration did not converge in " + std::to_string(cfg.max_picard) +
                           " sweeps; last change " + std::to_string(curve.change_history.back()) +
                           ", contraction estimate " + std::to_string(curve.contraction_estimate));
  }
  curve.left_asymptote = curve.slices.front();
  const double right = profile.one_sided ? s_max : 2.0 * profile.tau;
  curve.right_asymptote = average_slices(curve, right - cfg.plateau, right);
  return curve;
}

/// max over s ∈ [lo, hi] of |ũ₁(s) − ũ₂(s)|₀ for curves on the same grid step.
inline double curve_difference(const FloerCurve& a, const FloerCurve& b, double lo, double hi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.s.size(); ++i) {
    if (a.s[i] < lo - 1e-12 || a.s[i] > hi + 1e-12) continue;
    const auto it = std::min_element(b.s.begin(), b.s.end(), [&](double x, double y) {
      return std::abs(x - a.s[i]) < std::abs(y - a.s[i]);
    });
    const auto j = static_cast<std::size_t>(it - b.s.begin());
    if (std::abs(b.s[j] - a.s[i]) > 1e-9) throw RangeError("curves are not on a common s-grid");
    worst = std::max(worst, (a.slices[i] - b.slices[j]).norm());
  }
  return worst;
}

struct TailRow {
  int ell;
  double statistic;  // sup_s Σ_{|n|>ℓ} (Σ_p |Û(p,n)| max(|p|,1)^{m−1})²
  double scaled;     // statistic·ℓ^{h−d(r−1)−1/2}
};

struct FloerDiagnostics {
  double energy = 0.0;         // T∫Σ|∂_s W|² ds, centered differences in s
  double energy_spectral = 0.0;  // T∫Σ|λW − φ(∇G)ˆ|² ds, ∂_t taken spectrally
  double sup_F = 0.0;            // sampled sup |G_t| over the curve and the cutoff ball
  double energy_bound = 0.0;     // 4T·sup_F
  bool energy_passed = true;
  std::vector<TailRow> tail;
  bool tail_monotone = true;
  double tail_scaled_ratio = 0.0;  // max scaled / scaled at the first rung
  bool tail_bounded = true;        // the scaled statistic never exceeds the first rung by more than the slack
  double right_residual = 0.0;     // ‖hb_residual(u⁺)‖₀
  double left_norm = 0.0;          // |ũ(s_min)|₀
  DecayAudit right_audit;
};

/// Sup over s of the C^{m−1} surrogate of the spatial tail beyond ℓ.
inline double tail_statistic(const FloerCurve& curve, int ell, int m) {
  double sup = 0.0;
  for (const auto& U : curve.slices) {
    double total = 0.0;
    for (int n = -U.N(); n <= U.N(); ++n) {
      if (std::abs(n) <= ell) continue;
      double line = 0.0;
      for (int p = -U.P(); p <= U.P(); ++p) line += std::abs(U(p, n)) * std::pow(scale_weight(p), m - 1);
      total += line * line;
    }
    sup = std::max(sup, total);
  }
  return sup;
}

inline FloerDiagnostics floer_diagnostics(const FloerCurve& curve, const HBProblem& prob,
                                          const std::vector<int>& ladder = {4, 8, 16, 24}, int ball_samples = 200,
                                          std::uint64_t seed = 11, double energy_slack = 0.05,
                                          double tail_slack = 0.10) {
  FloerDiagnostics diag;
  const auto& params = prob.params();
  const auto& nl = prob.nonlinearity();
  const double T = params.T();
  const std::size_t J = curve.s.size();
  const double ds = curve.ds();
  const int P = prob.P(), N = prob.N();

  // energy, both ways
  std::vector<double> density_s(J), density_t(J);
  for (std::size_t j = 0; j < J; ++j) {
    const std::size_t lo = j == 0 ? 0 : j - 1;
    const std::size_t hi = j + 1 == J ? j : j + 1;
    const auto dW = (1.0 / ((hi - lo) * ds)) * (curve.slices[hi] - curve.slices[lo]);
    density_s[j] = dW.norm() * dW.norm();
    const double phi = curve.profile(curve.s[j]);
    SpaceTimeField g(P, N, Gauge::twisted);
    if (phi != 0.0) g = prob.gradient_coeffs(curve.slices[j]);
    double acc = 0.0;
    for (int p = -P; p <= P; ++p) {
      for (int n = -N; n <= N; ++n) {
        if (n != 0) acc += std::norm(prob.divisor(p, n) * curve.slices[j](p, n) - phi * g(p, n));
      }
    }
    density_t[j] = acc;
  }
  auto trapezoid = [&](const std::vector<double>& y) {
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < y.size(); ++j) sum += 0.5 * (y[j] + y[j + 1]) * ds;
    return T * sum;
  };
  diag.energy = trapezoid(density_s);
  diag.energy_spectral = trapezoid(density_t);

  // sampled sup|F|: along the curve, then over random fields in the cutoff ball
  const std::size_t stride = std::max<std::size_t>(1, J / 200);
  for (std::size_t j = 0; j < J; j += stride) {
    const int M = prob.temporal_grid();
    const auto slices = periodic_slices(curve.slices[j], M);
    for (int k = 0; k < M; ++k) {
      diag.sup_F = std::max(diag.sup_F, std::abs(nl.F(slices[static_cast<std::size_t>(k)], T * k / M)));
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ball = nl.spec().cutoff ? nl.spec().cutoff->radius + 1.0 : 1.0;
  for (int i = 0; i < ball_samples; ++i) {
    SpectralField u(N);
    for (int n = -N; n <= N; ++n) {
      if (n != 0) u[n] = Complex(gauss(rng), gauss(rng)) * std::pow(scale_weight(n), params.h() - 1.0) / (1.0 + n * n);
    }
    const double target = std::sqrt(ball * unit(rng));
    u *= target / scale_norm(u, -params.h());
    diag.sup_F = std::max(diag.sup_F, std::abs(nl.F(u, T * unit(rng))));
  }
  diag.energy_bound = 4.0 * T * diag.sup_F;
  diag.energy_passed = std::max(diag.energy, diag.energy_spectral) <= diag.energy_bound * (1.0 + energy_slack);

  // tail ladder
  const int m = params.m();
  const double exponent = params.decay_exponent() - 0.5;
  for (int ell : ladder) {
    if (ell >= N) continue;
    const double stat = tail_statistic(curve, ell, m);
    diag.tail.push_back({ell, stat, stat * std::pow(ell, exponent)});
  }
  for (std::size_t k = 1; k < diag.tail.size(); ++k) {
    if (diag.tail[k].statistic > (1.0 + tail_slack) * diag.tail[k - 1].statistic) diag.tail_monotone = false;
  }
  if (!diag.tail.empty()) {
    double mx = 0.0;
    for (const auto& row : diag.tail) mx = std::max(mx, row.scaled);
    diag.tail_scaled_ratio = diag.tail.front().scaled > 0.0 ? mx / diag.tail.front().scaled
                                                         : (mx > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    diag.tail_bounded = diag.tail_scaled_ratio <= 1.0 + tail_slack;
  }

  diag.right_residual = prob.residual(curve.right_asymptote).norm();
  diag.left_norm = curve.left_asymptote.norm();
  diag.right_audit = decay_audit(curve.right_asymptote, params);
  return diag;
}

}  // namespace hampde
