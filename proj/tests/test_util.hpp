#pragma once

#include <cmath>
#include <random>

#include "hampde/model.hpp"
#include "hampde/spectral.hpp"

namespace hampde::testing {

/// Random field with coefficients decaying like w(n)^{-decay}.
inline SpectralField random_field(std::mt19937_64& rng, int N, double amplitude = 1.0,
                                  double decay = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField u(N);
  for (int n = -N; n <= N; ++n) {
    u[n] = amplitude * Complex(g(rng), g(rng)) * std::pow(scale_weight(n), -decay);
  }
  return u;
}

inline SpaceTimeField random_space_time(std::mt19937_64& rng, int P, int N, double amplitude = 1.0,
                                        double decay = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpaceTimeField U(P, N, Gauge::twisted);
  for (int p = -P; p <= P; ++p) {
    for (int n = -N; n <= N; ++n) {
      U(p, n) = amplitude * Complex(g(rng), g(rng)) *
                std::pow(scale_weight(n) * scale_weight(p), -decay);
    }
  }
  return U;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (int n = -a.cap(); n <= a.cap(); ++n) m = std::max(m, std::abs(a[n] - b.at(n)));
  return m;
}

/// Model with aT/2π equal to the golden ratio, X = 2π.
inline ModelParams golden_model(int d = 2, double h = 5.5, EquationKind kind = EquationKind::nls) {
  return ModelParams::from_ratio(2.0 * std::numbers::pi, parse_enclosure("golden"), d, h, 2.0, kind);
}

}  // namespace hampde::testing
