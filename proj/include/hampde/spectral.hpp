#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hampde/fft.hpp"
#include "hampde/model.hpp"

namespace hampde {

/// Pairwise (cascade) summation. The recursion order depends only on the
/// length, so results are reproducible bit for bit.
inline double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Spatial Fourier coefficients û(n), n ∈ [−N, N], of one field.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int N) : N_(N), coeffs_(static_cast<std::size_t>(2 * N + 1)) {
    if (N < 0) throw RangeError("mode cap must be non-negative");
  }
  SpectralField(int N, std::vector<Complex> coeffs) : N_(N), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != static_cast<std::size_t>(2 * N + 1)) {
      throw RangeError("coefficient count does not match mode cap");
    }
  }

  [[nodiscard]] int cap() const { return N_; }
  [[nodiscard]] std::size_t size() const { return coeffs_.size(); }

  Complex& operator[](int n) { return coeffs_[static_cast<std::size_t>(n + N_)]; }
  const Complex& operator[](int n) const { return coeffs_[static_cast<std::size_t>(n + N_)]; }

  /// Coefficient of mode n; zero outside the stored window.
  [[nodiscard]] Complex at(int n) const { return std::abs(n) <= N_ ? (*this)[n] : Complex{}; }

  [[nodiscard]] std::span<Complex> data() { return coeffs_; }
  [[nodiscard]] std::span<const Complex> data() const { return coeffs_; }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpectralField& operator*=(Complex s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(Complex s, SpectralField a) { return a *= s; }

  /// Copy onto a different mode cap (zero padding or cutting).
  [[nodiscard]] SpectralField resized(int N) const {
    SpectralField out(N);
    for (int n = -std::min(N, N_); n <= std::min(N, N_); ++n) out[n] = (*this)[n];
    return out;
  }

  /// Real inner product Re Σ û(n) conj(v̂(n)).
  [[nodiscard]] double dot(const SpectralField& o) const {
    check_same(o);
    std::vector<double> terms(coeffs_.size());
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      terms[i] = (coeffs_[i] * std::conj(o.coeffs_[i])).real();
    }
    return pairwise_sum(terms);
  }

 private:
  void check_same(const SpectralField& o) const {
    if (o.N_ != N_) throw RangeError("mode caps differ");
  }

  int N_ = 0;
  std::vector<Complex> coeffs_{Complex{}};
};

/// Hilbert-scale norm (Σ_n |û(n)|² w(n)^{2σ})^{1/2}, w(n) = max(|n|, 1).
inline double scale_norm(const SpectralField& u, double sigma) {
  std::vector<double> terms(u.size());
  for (int n = -u.cap(); n <= u.cap(); ++n) {
    terms[static_cast<std::size_t>(n + u.cap())] =
        std::norm(u[n]) * std::pow(scale_weight(n), 2.0 * sigma);
  }
  return std::sqrt(pairwise_sum(terms));
}

struct Truncation {
  SpectralField head;  // modes |n| <= k, stored with cap k
  SpectralField tail;  // modes |n| > k, stored with the original cap
};

/// Splits u into the modes |n| ≤ k and the remaining tail.
inline Truncation truncate(const SpectralField& u, int k) {
  if (k < 0 || k > u.cap()) {
    throw RangeError("truncation level " + std::to_string(k) + " outside [0, " +
                     std::to_string(u.cap()) + "]");
  }
  Truncation out{SpectralField(k), u};
  for (int n = -k; n <= k; ++n) {
    out.head[n] = u[n];
    out.tail[n] = Complex{};
  }
  return out;
}

/// Projection onto |n| ≤ k keeping the original cap.
inline SpectralField project(const SpectralField& u, int k) {
  SpectralField out(u.cap());
  for (int n = -std::min(k, u.cap()); n <= std::min(k, u.cap()); ++n) out[n] = u[n];
  return out;
}

/// Exact free flow φ^A_t: mode n is multiplied by e^{i a n^d t}.
inline SpectralField free_flow(const SpectralField& u, double t, const ModelParams& params) {
  SpectralField out(u.cap());
  for (int n = -u.cap(); n <= u.cap(); ++n) {
    out[n] = u[n] * std::polar(1.0, params.eigenvalue(n) * t);
  }
  return out;
}

enum class Gauge { twisted, physical };

inline std::string to_string(Gauge g) { return g == Gauge::twisted ? "twisted" : "physical"; }

inline Gauge gauge_from_string(const std::string& s) {
  if (s == "twisted") return Gauge::twisted;
  if (s == "physical") return Gauge::physical;
  throw ConfigError("unknown gauge '" + s + "'");
}

/// Space-time coefficients Û(p, n), p ∈ [−P, P], n ∈ [−N, N].
///
/// Twisted gauge: u(t) = Σ Û(p,n) e^{i(2πp/T − a n^d)t} z_n.
/// Physical gauge: u(t) = Σ Û(p,n) e^{i2πpt/T} z_n.
/// The two share coefficients; the physical field is φ^A_t of the twisted one.
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(int P, int N, Gauge gauge = Gauge::twisted)
      : P_(P), N_(N), gauge_(gauge),
        coeffs_(static_cast<std::size_t>((2 * P + 1) * (2 * N + 1))) {
    if (P < 0 || N < 0) throw RangeError("mode caps must be non-negative");
  }

  [[nodiscard]] int P() const { return P_; }
  [[nodiscard]] int N() const { return N_; }
  [[nodiscard]] Gauge gauge() const { return gauge_; }
  void set_gauge(Gauge g) { gauge_ = g; }
  [[nodiscard]] std::size_t size() const { return coeffs_.size(); }

  Complex& operator()(int p, int n) { return coeffs_[index(p, n)]; }
  const Complex& operator()(int p, int n) const { return coeffs_[index(p, n)]; }
  [[nodiscard]] Complex at(int p, int n) const {
    return (std::abs(p) <= P_ && std::abs(n) <= N_) ? (*this)(p, n) : Complex{};
  }

  [[nodiscard]] std::span<Complex> data() { return coeffs_; }
  [[nodiscard]] std::span<const Complex> data() const { return coeffs_; }

  SpaceTimeField& operator+=(const SpaceTimeField& o) {
    check_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpaceTimeField& operator-=(const SpaceTimeField& o) {
    check_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpaceTimeField& operator*=(Complex s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  friend SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
  friend SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
  friend SpaceTimeField operator*(Complex s, SpaceTimeField a) { return a *= s; }

  /// |U|_0 = (Σ |Û(p,n)|²)^{1/2}, the L²-in-time average of |u(t)|_0.
  [[nodiscard]] double norm() const {
    std::vector<double> terms(coeffs_.size());
    for (std::size_t i = 0; i < coeffs_.size(); ++i) terms[i] = std::norm(coeffs_[i]);
    return std::sqrt(pairwise_sum(terms));
  }

  /// Copy onto other caps (zero padding or cutting), same gauge.
  [[nodiscard]] SpaceTimeField resized(int P, int N) const {
    SpaceTimeField out(P, N, gauge_);
    for (int p = -std::min(P, P_); p <= std::min(P, P_); ++p) {
      for (int n = -std::min(N, N_); n <= std::min(N, N_); ++n) out(p, n) = (*this)(p, n);
    }
    return out;
  }

 private:
  [[nodiscard]] std::size_t index(int p, int n) const {
    return static_cast<std::size_t>((p + P_) * (2 * N_ + 1) + (n + N_));
  }
  void check_same(const SpaceTimeField& o) const {
    if (o.P_ != P_ || o.N_ != N_) throw RangeError("space-time caps differ");
  }

  int P_ = 0;
  int N_ = 0;
  Gauge gauge_ = Gauge::twisted;
  std::vector<Complex> coeffs_{Complex{}};
};

/// Flips the gauge bookkeeping; coefficients are shared by both gauges.
inline SpaceTimeField gauge_transform(const SpaceTimeField& U, Gauge target) {
  SpaceTimeField out = U;
  out.set_gauge(target);
  return out;
}

/// Time-domain value u(t) in the field's own gauge.
inline SpectralField evaluate(const SpaceTimeField& U, double t, const ModelParams& params) {
  SpectralField out(U.N());
  const double omega = 2.0 * std::numbers::pi / params.T();
  for (int n = -U.N(); n <= U.N(); ++n) {
    const double shift = U.gauge() == Gauge::twisted ? -params.eigenvalue(n) : 0.0;
    Complex acc{};
    for (int p = -U.P(); p <= U.P(); ++p) {
      acc += U(p, n) * std::polar(1.0, (omega * p + shift) * t);
    }
    out[n] = acc;
  }
  return out;
}

/// Values Σ_p Û(p,n) e^{2πi p j / M} on the temporal grid t_j = jT/M. For a
/// twisted field this is the physical-gauge field φ^A_{t_j} ũ(t_j).
inline std::vector<SpectralField> periodic_slices(const SpaceTimeField& U, int M) {
  if (M < 2 * U.P() + 1) throw GridError("temporal grid smaller than 2P+1");
  const auto& plan = fft::plan(M);
  std::vector<SpectralField> slices(static_cast<std::size_t>(M), SpectralField(U.N()));
  std::vector<Complex> line(static_cast<std::size_t>(M));
  for (int n = -U.N(); n <= U.N(); ++n) {
    std::fill(line.begin(), line.end(), Complex{});
    for (int p = -U.P(); p <= U.P(); ++p) line[static_cast<std::size_t>(fft::wrap(p, M))] = U(p, n);
    plan.backward(line, line);
    for (int j = 0; j < M; ++j) slices[static_cast<std::size_t>(j)][n] = line[static_cast<std::size_t>(j)];
  }
  return slices;
}

/// Inverse of periodic_slices, keeping temporal modes |p| ≤ P.
inline SpaceTimeField from_periodic_slices(const std::vector<SpectralField>& slices, int P,
                                           Gauge gauge) {
  const int M = static_cast<int>(slices.size());
  if (M < 2 * P + 1) throw GridError("temporal grid smaller than 2P+1");
  const int N = slices.front().cap();
  const auto& plan = fft::plan(M);
  SpaceTimeField U(P, N, gauge);
  std::vector<Complex> line(static_cast<std::size_t>(M));
  for (int n = -N; n <= N; ++n) {
    for (int j = 0; j < M; ++j) line[static_cast<std::size_t>(j)] = slices[static_cast<std::size_t>(j)][n];
    plan.forward(line, line);
    for (int p = -P; p <= P; ++p) U(p, n) = line[static_cast<std::size_t>(fft::wrap(p, M))] / static_cast<double>(M);
  }
  return U;
}

/// Samples u(x_j), x_j = jX/M, of Σ û(n) e^{2πinx/X}.
inline std::vector<Complex> to_grid(const SpectralField& u, int M) {
  if (M < 2 * u.cap() + 1) throw GridError("spatial grid smaller than 2N+1");
  std::vector<Complex> grid(static_cast<std::size_t>(M));
  for (int n = -u.cap(); n <= u.cap(); ++n) grid[static_cast<std::size_t>(fft::wrap(n, M))] += u[n];
  fft::plan(M).backward(grid, grid);
  return grid;
}

/// Fourier coefficients |n| ≤ N of grid samples.
inline SpectralField from_grid(std::vector<Complex> grid, int N) {
  const int M = static_cast<int>(grid.size());
  if (M < 2 * N + 1) throw GridError("spatial grid smaller than 2N+1");
  fft::plan(M).forward(grid, grid);
  SpectralField u(N);
  for (int n = -N; n <= N; ++n) u[n] = grid[static_cast<std::size_t>(fft::wrap(n, M))] / static_cast<double>(M);
  return u;
}

// --- wave-equation pair representation --------------------------------------
//
// For the wave kind, û(n) = q_n − i p_n where (φ, π) = Σ_n (q_n, p_n) b_n(x)
// and b_n = ξ_n / sqrt(w(n)), ξ_n = √2 cos(2πnx/X) for n ≤ 0, √2 sin(2πnx/X)
// for n > 0.

/// Ordinary Fourier coefficients (e^{2πikx/X} basis) of Σ_n c_n b_n for real c_n.
inline SpectralField pair_component_to_fourier(std::span<const double> c, int N) {
  SpectralField f(N);
  auto at = [&](int n) { return c[static_cast<std::size_t>(n + N)]; };
  f[0] = std::sqrt(2.0) * at(0);
  for (int k = 1; k <= N; ++k) {
    const double s = 1.0 / std::sqrt(2.0 * k);
    f[k] = Complex(at(-k), -at(k)) * s;
    f[-k] = Complex(at(-k), at(k)) * s;
  }
  return f;
}

struct WavePair {
  std::vector<double> phi;  // field values on the grid
  std::vector<double> pi;   // momentum values on the grid
  double max_imag = 0.0;    // largest imaginary residue met while reconstructing
};

/// Reconstructs the real pair (φ, π) on an M-point grid.
inline WavePair reconstruct_pair(const SpectralField& u, int M) {
  const int N = u.cap();
  std::vector<double> q(u.size()), p(u.size());
  for (int n = -N; n <= N; ++n) {
    q[static_cast<std::size_t>(n + N)] = u[n].real();
    p[static_cast<std::size_t>(n + N)] = -u[n].imag();
  }
  WavePair out;
  auto fill = [&](std::span<const double> c, std::vector<double>& dst) {
    auto grid = to_grid(pair_component_to_fourier(c, N), M);
    dst.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      dst[j] = grid[j].real();
      out.max_imag = std::max(out.max_imag, std::abs(grid[j].imag()));
    }
  };
  fill(q, out.phi);
  fill(p, out.pi);
  return out;
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json to_json(const SpaceTimeField& U) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (int p = -U.P(); p <= U.P(); ++p) {
    for (int n = -U.N(); n <= U.N(); ++n) {
      const Complex c = U(p, n);
      if (std::abs(c) < 1e-300) continue;
      coeffs.push_back({p, n, c.real(), c.imag()});
    }
  }
  return {{"gauge", to_string(U.gauge())}, {"N", U.N()}, {"P", U.P()}, {"coeffs", coeffs}};
}

inline nlohmann::json to_json(const SpectralField& u) {
  SpaceTimeField U(0, u.cap(), Gauge::physical);
  for (int n = -u.cap(); n <= u.cap(); ++n) U(0, n) = u[n];
  return to_json(U);
}

inline SpaceTimeField space_time_from_json(const nlohmann::json& j) {
  SpaceTimeField U(j.at("P").get<int>(), j.at("N").get<int>(),
                   gauge_from_string(j.at("gauge").get<std::string>()));
  for (const auto& entry : j.at("coeffs")) {
    const int p = entry.at(0).get<int>();
    const int n = entry.at(1).get<int>();
    if (std::abs(p) > U.P() || std::abs(n) > U.N()) throw RangeError("coefficient outside caps");
    U(p, n) = Complex(entry.at(2).get<double>(), entry.at(3).get<double>());
  }
  return U;
}

inline SpectralField spectral_from_json(const nlohmann::json& j) {
  SpaceTimeField U = space_time_from_json(j);
  if (U.P() != 0) throw RangeError("expected a single-time field (P = 0)");
  SpectralField u(U.N());
  for (int n = -U.N(); n <= U.N(); ++n) u[n] = U(0, n);
  return u;
}

}  // namespace hampde
