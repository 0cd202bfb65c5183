#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "hampde/diophantine.hpp"
#include "hampde/nonlinearity.hpp"
#include "hampde/spectral.hpp"

namespace hampde {

enum class Scheme { lie, strang };

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "lie") return Scheme::lie;
  if (s == "strang") return Scheme::strang;
  throw ConfigError("unknown splitting scheme '" + s + "' (expected lie or strang)");
}

struct FlowConfig {
  int steps_per_period = 256;
  Scheme scheme = Scheme::strang;
  // The n = 0 line is resonant for every T; the Hamiltonian system is
  // posed on its complement (see README).
  bool project_zero_mode = true;

  [[nodiscard]] double dt(const ModelParams& params) const { return params.T() / steps_per_period; }
};

struct TraceRow {
  double t;
  double norm0;
  double norm_minus_h;
  double F;
};

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "t,norm_0,norm_minus_h,F\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.t << ',' << r.norm0 << ',' << r.norm_minus_h << ',' << r.F << '\n';
}

/// Vector fields of u̇ = i(Au + ∇F_t(u)) and of its twisted form v̇ = i∇G_t(v).
class HamiltonianSystem {
 public:
  HamiltonianSystem(const Nonlinearity& nl, FlowConfig cfg) : nl_(&nl), cfg_(cfg) {}

  [[nodiscard]] const Nonlinearity& nonlinearity() const { return *nl_; }
  [[nodiscard]] const ModelParams& params() const { return nl_->params(); }
  [[nodiscard]] const FlowConfig& config() const { return cfg_; }

  /// i Π ∇F_t(u), the nonlinear part of the physical field.
  [[nodiscard]] SpectralField nonlinear_field(const SpectralField& u, double t) const {
    return rotate(nl_->grad(u, t));
  }
  /// i Π ∇G_t(v), the twisted field.
  [[nodiscard]] SpectralField twisted_field(const SpectralField& v, double t) const {
    return rotate(nl_->grad_G(v, t));
  }
  /// Full Hamiltonian ½⟨Au,u⟩ + F_t(u).
  [[nodiscard]] double energy(const SpectralField& u, double t) const {
    std::vector<double> terms(u.size());
    for (int n = -u.cap(); n <= u.cap(); ++n) {
      terms[static_cast<std::size_t>(n + u.cap())] = 0.5 * params().eigenvalue(n) * std::norm(u[n]);
    }
    return pairwise_sum(terms) + nl_->F(u, t);
  }

 private:
  SpectralField rotate(SpectralField g) const {
    g *= Complex(0.0, 1.0);
    if (cfg_.project_zero_mode) g[0] = Complex{};
    return g;
  }

  const Nonlinearity* nl_;
  FlowConfig cfg_;
};

/// One classical RK4 step of u̇ = f(u, t) from t to t + h.
inline SpectralField rk4_step(const std::function<SpectralField(const SpectralField&, double)>& f,
                              const SpectralField& u, double t, double h) {
  const auto k1 = f(u, t);
  const auto k2 = f(u + Complex(h / 2) * k1, t + h / 2);
  const auto k3 = f(u + Complex(h / 2) * k2, t + h / 2);
  const auto k4 = f(u + Complex(h) * k3, t + h);
  return u + Complex(h / 6) * (k1 + Complex(2.0) * k2 + Complex(2.0) * k3 + k4);
}

/// One splitting step of length dt starting at time t.
inline SpectralField step(const SpectralField& u, double t, double dt, const HamiltonianSystem& sys) {
  auto nl = [&](const SpectralField& w, double s) { return sys.nonlinear_field(w, s); };
  const auto& params = sys.params();
  if (sys.config().scheme == Scheme::lie) {
    return free_flow(rk4_step(nl, u, t, dt), dt, params);
  }
  auto w = rk4_step(nl, u, t, dt / 2);
  w = free_flow(w, dt, params);
  return rk4_step(nl, w, t + dt / 2, dt / 2);
}

inline int step_count(double t0, double t1, double dt) {
  if (t1 < t0) throw RangeError("flow interval must satisfy t1 >= t0");
  if (t1 == t0) return 0;
  return std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9)));
}

/// Physical flow φ^H from t0 to t1 by repeated splitting steps.
inline SpectralField flow_map(const SpectralField& u0, double t0, double t1, const HamiltonianSystem& sys,
                              std::vector<TraceRow>* trace = nullptr) {
  const auto& params = sys.params();
  const int steps = step_count(t0, t1, sys.config().dt(params));
  const double h = steps > 0 ? (t1 - t0) / steps : 0.0;
  auto record = [&](const SpectralField& u, double t) {
    if (trace) trace->push_back({t, scale_norm(u, 0.0), scale_norm(u, -params.h()), sys.nonlinearity().F(u, t)});
  };
  SpectralField u = u0;
  record(u, t0);
  for (int i = 0; i < steps; ++i) {
    u = step(u, t0 + i * h, h, sys);
    record(u, t0 + (i + 1) * h);
  }
  return u;
}

/// Flow of the twisted equation v̇ = i∇G_t(v) by plain RK4.
inline SpectralField twisted_flow_map(const SpectralField& v0, double t0, double t1, const HamiltonianSystem& sys,
                                      std::optional<int> steps_override = {}) {
  const int steps = steps_override ? *steps_override : step_count(t0, t1, sys.config().dt(sys.params()));
  const double h = steps > 0 ? (t1 - t0) / steps : 0.0;
  auto f = [&](const SpectralField& w, double s) { return sys.twisted_field(w, s); };
  SpectralField v = v0;
  for (int i = 0; i < steps; ++i) v = rk4_step(f, v, t0 + i * h, h);
  return v;
}

struct DisplacementReport {
  double c = 0.0;            // |φ^A_T u − u|² ≥ c|u|²₋ₕ on the window
  double c_prime = 0.0;      // sampled sup |∇G|₀
  double worst_ratio = 0.0;  // min over trials of |φ^A_T u − u|₀ / (√c |u|₋ₕ)
  bool shell_check_passed = true;
  double max_nonlinear_displacement = 0.0;  // sup |φ^G_T u − u|₀
  bool nonlinear_check_passed = true;
  double localization_radius = 0.0;  // c'T/√c
};

/// Checks the two displacement estimates behind the localization argument.
///
/// The free displacement of mode n is |e^{iaTn^d} − 1| = 2|sin(π x n^d)|,
/// x = aT/2π, which is at least 4·dist(x n^d, ℤ) = (2T/π)·μ(n). A scan
/// bound μ(n) ≥ c_s n^{−d(r−1)} then gives c = (2T c_s/π)² whenever
/// h ≥ d(r−1).
inline DisplacementReport displacement_bound_check(const HamiltonianSystem& sys, int N,
                                                   const std::optional<DivisorTable>& scan, int trials,
                                                   std::uint64_t seed, double tolerance = 0.05) {
  if (!scan) throw ConfigError("displacement check needs a divisor scan of the configured model");
  if (static_cast<int>(scan->rows.size()) < N) {
    throw RangeError("divisor scan covers n <= " + std::to_string(scan->rows.size()) +
                     " but the window needs n <= " + std::to_string(N));
  }
  const auto& params = sys.params();
  const double T = params.T();
  const double h = params.h();
  if (h < scan->bound_exponent) throw ConfigError("displacement bound needs h >= d(r-1)");
  double cs = std::numeric_limits<double>::infinity();
  for (const auto& row : scan->rows) {
    if (row.n <= N) cs = std::min(cs, row.mu * std::pow(row.n, scan->bound_exponent));
  }
  DisplacementReport rep;
  rep.c = std::pow(2.0 * T * cs / std::numbers::pi, 2);
  rep.worst_ratio = std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, T);
  for (int trial = 0; trial < trials; ++trial) {
    const double shell = std::pow(2.0, trial % 8 - 3);  // |u|₋ₕ from 1/8 to 16
    SpectralField u(N);
    for (int n = -N; n <= N; ++n) {
      if (n != 0) u[n] = Complex(g(rng), g(rng)) * std::pow(scale_weight(n), h - 1.0) / (1.0 + n * n);
    }
    u *= shell / scale_norm(u, -h);
    const double free_disp = scale_norm(free_flow(u, T, params) - u, 0.0);
    const double ratio = free_disp / (std::sqrt(rep.c) * scale_norm(u, -h));
    rep.worst_ratio = std::min(rep.worst_ratio, ratio);
    if (ratio < 1.0 - tolerance) rep.shell_check_passed = false;

    for (int j = 0; j < 4; ++j) {
      rep.c_prime = std::max(rep.c_prime, scale_norm(sys.nonlinearity().grad_G(u, time(rng)), 0.0));
    }
    // integrate φ^G_T while recording |∇G| along the way, so c' covers the path
    const int steps = step_count(0.0, T, sys.config().dt(params));
    const double hstep = T / steps;
    auto f = [&](const SpectralField& w, double s) {
      auto field = sys.twisted_field(w, s);
      rep.c_prime = std::max(rep.c_prime, scale_norm(field, 0.0));
      return field;
    };
    SpectralField moved = u;
    for (int i = 0; i < steps; ++i) moved = rk4_step(f, moved, i * hstep, hstep);
    rep.max_nonlinear_displacement = std::max(rep.max_nonlinear_displacement, scale_norm(moved - u, 0.0));
  }
  rep.nonlinear_check_passed = rep.max_nonlinear_displacement <= rep.c_prime * T * (1.0 + tolerance);
  rep.localization_radius = rep.c_prime * T / std::sqrt(rep.c);
  return rep;
}

}  // namespace hampde
