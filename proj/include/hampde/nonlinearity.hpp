#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hampde/model.hpp"
#include "hampde/spectral.hpp"

namespace hampde {

/// Convolution kernel ψ given by its Fourier coefficients ψ̂(n), with the
/// normalization (u∗ψ)(x) = (1/X)∫u(y)ψ(x−y)dy, so that (u∗ψ)ˆ = ûψ̂.
class Kernel {
 public:
  Kernel() = default;

  /// ψ̂(n) = (1+n²)^{−β/2}; decays with order β.
  static Kernel algebraic(double beta) {
    Kernel k;
    k.family_ = "algebraic";
    k.beta_ = beta;
    k.decay_order_ = beta;
    k.decay_constant_ = 1.0;
    return k;
  }

  /// Smooth bump ψ(x) ∝ exp(−1/(1−(x/δ)²)) on |x| < δ, normalized to ψ̂(0) = 1.
  /// Coefficients come from trapezoid quadrature, which converges faster
  /// than any power for a compactly supported C^∞ integrand.
  static Kernel bump(double width, double X, int cap = 1024, int nodes = 8192) {
    if (!(width > 0) || !(width <= X / 2)) throw ConfigError("bump width must lie in (0, X/2]");
    Kernel k;
    k.family_ = "bump";
    std::vector<double> xs, vals;
    const double hstep = 2.0 * width / nodes;
    for (int j = 1; j < nodes; ++j) {
      const double x = -width + j * hstep;
      const double y = x / width;
      xs.push_back(x);
      vals.push_back(std::exp(-1.0 / (1.0 - y * y)));
    }
    std::vector<Complex> table(static_cast<std::size_t>(2 * cap + 1));
    double mass = 0.0;
    for (double v : vals) mass += v;
    for (int n = 0; n <= cap; ++n) {
      double acc = 0.0;
      for (std::size_t j = 0; j < xs.size(); ++j) acc += vals[j] * std::cos(2.0 * std::numbers::pi * n * xs[j] / X);
      table[static_cast<std::size_t>(cap + n)] = acc / mass;
      table[static_cast<std::size_t>(cap - n)] = acc / mass;
    }
    k.table_ = SpectralField(cap, std::move(table));
    k.decay_order_ = 0.0;
    k.decay_constant_ = 1.0;
    return k;
  }

  /// Explicit coefficient table; zero outside its window.
  static Kernel from_table(SpectralField table) {
    Kernel k;
    k.family_ = "table";
    k.table_ = std::move(table);
    k.decay_order_ = 0.0;
    double mx = 0.0;
    for (const auto& c : k.table_.data()) mx = std::max(mx, std::abs(c));
    k.decay_constant_ = mx;
    return k;
  }

  /// Table read from CSV lines "n,re,im"; a header line and '#' comments are skipped.
  static Kernel from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open kernel file '" + path + "'");
    std::vector<std::tuple<int, double, double>> rows;
    std::string line;
    int lineno = 0, cap = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream fields(line);
      int n;
      double re, im;
      if (!(fields >> n >> re >> im)) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'n,re,im'");
      }
      rows.emplace_back(n, re, im);
      cap = std::max(cap, std::abs(n));
    }
    SpectralField table(cap);
    for (auto [n, re, im] : rows) table[n] = Complex(re, im);
    return from_table(std::move(table));
  }

  [[nodiscard]] Complex operator()(int n) const {
    if (family_ == "algebraic") return std::pow(1.0 + static_cast<double>(n) * n, -beta_ / 2.0);
    return table_.at(n);
  }

  /// Declares |ψ̂(n)| ≤ K w(n)^{−h_ψ}.
  void declare_decay(double order, double constant) {
    decay_order_ = order;
    decay_constant_ = constant;
  }
  [[nodiscard]] double decay_order() const { return decay_order_; }
  [[nodiscard]] double decay_constant() const { return decay_constant_; }
  [[nodiscard]] const std::string& family() const { return family_; }

  /// Throws if the declared decay bound fails on |n| ≤ cap.
  void verify_decay(int cap) const {
    for (int n = -cap; n <= cap; ++n) {
      const double bound = decay_constant_ * std::pow(scale_weight(n), -decay_order_);
      if (std::abs((*this)(n)) > bound * (1.0 + 1e-12)) {
        throw ConfigError("kernel coefficient at n = " + std::to_string(n) +
                          " violates the declared decay bound K w(n)^-" + std::to_string(decay_order_));
      }
    }
  }

  /// ψ̂(−n) = conj ψ̂(n), i.e. ψ is real-valued.
  [[nodiscard]] bool is_real(int cap) const {
    for (int n = 0; n <= cap; ++n) {
      if (std::abs((*this)(-n) - std::conj((*this)(n))) > 1e-14 * std::max(1.0, std::abs((*this)(n)))) return false;
    }
    return true;
  }

 private:
  std::string family_ = "algebraic";
  double beta_ = 0.0;
  SpectralField table_;
  double decay_order_ = 0.0;
  double decay_constant_ = 1.0;
};

enum class ProfileFamily { polynomial, sine_gordon, gaussian_poly };

/// Pointwise profile P(s) and the space-time modulation
/// m(t,x) = m0 + mt cos(2πt/T) + mx cos(2πx/X). The nonlinearity is m·P.
struct Profile {
  ProfileFamily family = ProfileFamily::polynomial;
  std::vector<double> coeffs{0.0, 0.0, 0.5};  // polynomial: Σ c_k s^k
  double width = 1.0;                          // gaussian_poly damping width
  double m0 = 1.0;
  double mt = 0.0;
  double mx = 0.0;

  [[nodiscard]] double value(double s) const {
    switch (family) {
      case ProfileFamily::polynomial:
        return poly(s);
      case ProfileFamily::sine_gordon:
        return coeffs.at(0) * (1.0 - std::cos(s));
      case ProfileFamily::gaussian_poly:
        return poly(s) * std::exp(-(s / width) * (s / width));
    }
    return 0.0;
  }

  [[nodiscard]] double derivative(double s) const {
    switch (family) {
      case ProfileFamily::polynomial:
        return poly_prime(s);
      case ProfileFamily::sine_gordon:
        return coeffs.at(0) * std::sin(s);
      case ProfileFamily::gaussian_poly: {
        const double g = std::exp(-(s / width) * (s / width));
        return (poly_prime(s) - 2.0 * s / (width * width) * poly(s)) * g;
      }
    }
    return 0.0;
  }

  [[nodiscard]] double modulation(double t, double x, double T, double X) const {
    return m0 + mt * std::cos(2.0 * std::numbers::pi * t / T) + mx * std::cos(2.0 * std::numbers::pi * x / X);
  }

  [[nodiscard]] bool is_zero() const {
    return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; }) ||
           (m0 == 0.0 && mt == 0.0 && mx == 0.0);
  }

 private:
  [[nodiscard]] double poly(double s) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * s + *it;
    return acc;
  }
  [[nodiscard]] double poly_prime(double s) const {
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * s + static_cast<double>(k) * coeffs[k];
    return acc;
  }
};

inline ProfileFamily profile_family_from_string(const std::string& s) {
  if (s == "polynomial") return ProfileFamily::polynomial;
  if (s == "sine_gordon") return ProfileFamily::sine_gordon;
  if (s == "gaussian_poly") return ProfileFamily::gaussian_poly;
  throw ConfigError("unknown profile '" + s + "' (expected polynomial, sine_gordon or gaussian_poly)");
}

/// Largest |P^{(j)}(s)|, j = 0..4, over |s| ≤ range, by central differences.
inline std::vector<double> profile_derivative_bounds(const Profile& prof, double range, int samples = 401) {
  std::vector<double> bounds(5, 0.0);
  const double hd = 1e-2 * std::max(range, 1.0) / 8.0;
  for (int i = 0; i < samples; ++i) {
    const double s = -range + 2.0 * range * i / (samples - 1);
    auto f = [&](double y) { return prof.value(y); };
    const double d0 = f(s);
    const double d1 = (f(s + hd) - f(s - hd)) / (2 * hd);
    const double d2 = (f(s + hd) - 2 * d0 + f(s - hd)) / (hd * hd);
    const double d3 = (f(s + 2 * hd) - 2 * f(s + hd) + 2 * f(s - hd) - f(s - 2 * hd)) / (2 * hd * hd * hd);
    const double d4 = (f(s + 2 * hd) - 4 * f(s + hd) + 6 * d0 - 4 * f(s - hd) + f(s - 2 * hd)) / (hd * hd * hd * hd);
    for (auto [j, v] : {std::pair{0, d0}, {1, d1}, {2, d2}, {3, d3}, {4, d4}}) {
      bounds[static_cast<std::size_t>(j)] = std::max(bounds[static_cast<std::size_t>(j)], std::abs(v));
    }
  }
  return bounds;
}

/// Smooth ramp χ: 1 on [0,R], 0 on [R+1,∞), quintic smoothstep in between.
struct Cutoff {
  double radius = 1.0;

  [[nodiscard]] double value(double r) const {
    const double y = std::clamp(r - radius, 0.0, 1.0);
    return 1.0 - y * y * y * (10.0 - 15.0 * y + 6.0 * y * y);
  }
  /// χ'(r); its minimum is −15/8 at the middle of the ramp.
  [[nodiscard]] double slope(double r) const {
    const double y = r - radius;
    if (y <= 0.0 || y >= 1.0) return 0.0;
    return -30.0 * y * y * (1.0 - y) * (1.0 - y);
  }
};

struct NonlinearitySpec {
  Kernel kernel = Kernel::algebraic(6.0);
  Profile profile;
  SpaceTimeField potential{0, 0, Gauge::physical};  // ĉ(p,n), physical gauge
  std::optional<Cutoff> cutoff;
  double amplitude = 1.0;  // ε, scales F̃ including the potential
  int grid_factor = 4;     // collocation grid M = grid_factor·(2N+1)
};

/// Returns a copy whose evaluation is multiplied by χ(|u|²₋ₕ).
inline NonlinearitySpec cutoff_wrap(NonlinearitySpec spec, double radius) {
  if (!(radius > 0)) throw ConfigError("cutoff radius must be > 0");
  spec.cutoff = Cutoff{radius};
  return spec;
}

/// (u∗ψ)ˆ(n) = û(n)ψ̂(n).
inline SpectralField convolve(const SpectralField& u, const Kernel& kernel) {
  SpectralField out(u.cap());
  for (int n = -u.cap(); n <= u.cap(); ++n) out[n] = u[n] * kernel(n);
  return out;
}

/// Evaluates F_t, ∇F_t and the twisted G_t = F_t∘φ^A_t for a model.
class Nonlinearity {
 public:
  Nonlinearity(NonlinearitySpec spec, ModelParams params)
      : spec_(std::move(spec)), params_(std::move(params)) {
    if (spec_.potential.gauge() != Gauge::physical) {
      spec_.potential = gauge_transform(spec_.potential, Gauge::physical);
    }
  }

  [[nodiscard]] const NonlinearitySpec& spec() const { return spec_; }
  [[nodiscard]] const ModelParams& params() const { return params_; }

  /// c_t as a spatial field on cap N.
  [[nodiscard]] SpectralField potential_at(double t, int N) const {
    if (spec_.potential.P() == 0 && spec_.potential.N() == 0 && spec_.potential(0, 0) == Complex{}) {
      return SpectralField(N);
    }
    return evaluate(spec_.potential, t, params_).resized(N);
  }

  /// F_t(u), or F_t(u^k) when a level is given.
  [[nodiscard]] double F(const SpectralField& u, double t, std::optional<int> level = {}) const {
    const SpectralField v = restrict(u, level);
    const double base = raw_F(v, t);
    if (!spec_.cutoff) return base;
    return spec_.cutoff->value(cutoff_argument(v)) * base;
  }

  /// ∇F_t(u) in the inner product Re Σ û v̄; same cap as u, supported in
  /// [−k,k] when a level is given.
  [[nodiscard]] SpectralField grad(const SpectralField& u, double t, std::optional<int> level = {}) const {
    const SpectralField v = restrict(u, level);
    SpectralField g(u.cap());
    if (spec_.cutoff) {
      const double r = cutoff_argument(v);
      const double chi = spec_.cutoff->value(r);
      if (chi == 0.0) return g;
      SpectralField gv = raw_grad(v, t);
      gv *= chi;
      const double slope = spec_.cutoff->slope(r);
      if (slope != 0.0) {
        const double base = raw_F(v, t);
        for (int n = -v.cap(); n <= v.cap(); ++n) {
          gv[n] += slope * base * 2.0 * std::pow(scale_weight(n), -2.0 * params_.h()) * v[n];
        }
      }
      return gv.resized(u.cap());
    }
    return raw_grad(v, t).resized(u.cap());
  }

  /// G_t(u) = F_t(φ^A_t u).
  [[nodiscard]] double G(const SpectralField& u, double t, std::optional<int> level = {}) const {
    return F(free_flow(u, t, params_), t, level);
  }

  /// ∇G_t(u) = φ^A_{−t} ∇F_t(φ^A_t u); the adjoint of a unitary map is its inverse.
  [[nodiscard]] SpectralField grad_G(const SpectralField& u, double t, std::optional<int> level = {}) const {
    return free_flow(grad(free_flow(u, t, params_), t, level), -t, params_);
  }

  /// |u|²₋ₕ, the argument of the cutoff.
  [[nodiscard]] double cutoff_argument(const SpectralField& u) const {
    const double s = scale_norm(u, -params_.h());
    return s * s;
  }

  [[nodiscard]] int grid_size(int N) const { return spec_.grid_factor * (2 * N + 1); }

 private:
  SpectralField restrict(const SpectralField& u, std::optional<int> level) const {
    if (!level) return u;
    return truncate(u, *level).head;
  }

  void check_grid(int M, int N) const {
    if (M < 2 * (2 * N + 1)) {
      throw GridError("collocation grid M = " + std::to_string(M) + " below 2(2N+1) = " +
                      std::to_string(2 * (2 * N + 1)) + "; nonlinear terms would alias");
    }
  }

  std::vector<double> modulation_grid(double t, int M) const {
    std::vector<double> m(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) {
      m[static_cast<std::size_t>(j)] =
          spec_.profile.modulation(t, params_.X() * j / M, params_.T(), params_.X());
    }
    return m;
  }

  /// Real field values (φ∗ψ)(x_j) for the wave kind.
  std::vector<double> wave_field(const SpectralField& u, int M) const {
    const int N = u.cap();
    std::vector<double> q(u.size());
    for (int n = -N; n <= N; ++n) q[static_cast<std::size_t>(n + N)] = u[n].real();
    auto grid = to_grid(convolve(pair_component_to_fourier(q, N), spec_.kernel), M);
    std::vector<double> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) out[j] = grid[j].real();
    return out;
  }

  double raw_F(const SpectralField& u, double t) const {
    const int N = u.cap();
    const double X = params_.X();
    double value = 0.0;
    if (!spec_.profile.is_zero()) {
      const int M = grid_size(N);
      check_grid(M, N);
      const auto m = modulation_grid(t, M);
      std::vector<double> terms(static_cast<std::size_t>(M));
      if (params_.kind() == EquationKind::nls) {
        auto v = to_grid(convolve(u, spec_.kernel), M);
        for (std::size_t j = 0; j < v.size(); ++j) terms[j] = m[j] * spec_.profile.value(std::norm(v[j]));
        value = 0.5 * X / M * pairwise_sum(terms);
      } else {
        auto phi = wave_field(u, M);
        for (std::size_t j = 0; j < phi.size(); ++j) terms[j] = m[j] * spec_.profile.value(phi[j]);
        value = X / (2.0 * std::numbers::pi) / M * pairwise_sum(terms);
      }
    }
    value += potential_at(t, N).dot(u);
    return spec_.amplitude * value;
  }

  SpectralField raw_grad(const SpectralField& u, double t) const {
    const int N = u.cap();
    const double X = params_.X();
    SpectralField g = potential_at(t, N);
    if (!spec_.profile.is_zero()) {
      const int M = grid_size(N);
      check_grid(M, N);
      const auto m = modulation_grid(t, M);
      if (params_.kind() == EquationKind::nls) {
        auto v = to_grid(convolve(u, spec_.kernel), M);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] *= m[j] * spec_.profile.derivative(std::norm(v[j]));
        const auto q = from_grid(std::move(v), N);
        for (int n = -N; n <= N; ++n) g[n] += X * q[n] * std::conj(spec_.kernel(n));
      } else {
        auto phi = wave_field(u, M);
        std::vector<Complex> s(phi.size());
        for (std::size_t j = 0; j < phi.size(); ++j) s[j] = m[j] * spec_.profile.derivative(phi[j]);
        const auto sh = from_grid(std::move(s), N);
        const double c = X / (2.0 * std::numbers::pi);
        const auto& psi = spec_.kernel;
        g[0] += c * std::sqrt(2.0) * (psi(0) * sh[0]).real();
        for (int j = 1; j <= N; ++j) {
          const double norm = 1.0 / std::sqrt(2.0 * j);
          const Complex I(0.0, 1.0);
          g[j] += c * norm * (-I * psi(j) * sh[-j] + I * psi(-j) * sh[j]).real();
          g[-j] += c * norm * (psi(j) * sh[-j] + psi(-j) * sh[j]).real();
        }
      }
    }
    g *= spec_.amplitude;
    return g;
  }

  NonlinearitySpec spec_;
  ModelParams params_;
};

}  // namespace hampde
