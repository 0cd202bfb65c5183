#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hampde/floer.hpp"
#include "test_util.hpp"

namespace hampde {
namespace {

using testing::golden_model;

SpaceTimeField potential(int P, int N, double c0 = 0.5) {
  SpaceTimeField c(P, N, Gauge::physical);
  for (int p = -P; p <= P; ++p) {
    for (int n = -N; n <= N; ++n) {
      if (n != 0) c(p, n) = c0 * std::exp(-(std::abs(p) + std::abs(n)));
    }
  }
  return c;
}

NonlinearitySpec linear_spec(const SpaceTimeField& c, double eps) {
  NonlinearitySpec spec;
  spec.profile.coeffs = {0.0};
  spec.potential = c;
  spec.amplitude = eps;
  return spec;
}

NonlinearitySpec cubic_forced(double eps) {
  NonlinearitySpec spec;
  spec.profile.coeffs = {0.0, 0.0, 0.5};
  spec.potential = potential(3, 3);
  spec.amplitude = eps;
  return cutoff_wrap(spec, 1.0);
}

// Dense RK4 reference for the bounded solution of w' = λw + f with f = 0
// outside [lo, hi], started on the contracting side.
std::vector<Complex> dense_reference(double lambda, const std::function<Complex(double)>& f, double s0, double s1,
                                     double ds, int refine) {
  const int cells = static_cast<int>(std::llround((s1 - s0) / ds));
  const double h = ds / refine;
  std::vector<Complex> out(static_cast<std::size_t>(cells + 1));
  auto rhs = [&](Complex w, double s) { return lambda * w + f(s); };
  auto rk4 = [&](Complex w, double s, double step) {
    const Complex k1 = rhs(w, s);
    const Complex k2 = rhs(w + step / 2 * k1, s + step / 2);
    const Complex k3 = rhs(w + step / 2 * k2, s + step / 2);
    const Complex k4 = rhs(w + step * k3, s + step);
    return w + step / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  if (lambda < 0) {
    Complex w{};
    out[0] = w;
    for (int j = 0; j < cells; ++j) {
      for (int k = 0; k < refine; ++k) w = rk4(w, s0 + j * ds + k * h, h);
      out[static_cast<std::size_t>(j + 1)] = w;
    }
  } else {
    Complex w{};
    out[static_cast<std::size_t>(cells)] = w;
    for (int j = cells; j > 0; --j) {
      for (int k = 0; k < refine; ++k) w = rk4(w, s0 + j * ds - k * h, -h);
      out[static_cast<std::size_t>(j - 1)] = w;
    }
  }
  return out;
}

double bump(double s, double c, double width) {
  const double y = (s - c) / width;
  return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0;
}

TEST(Cutoff, PaperRequirements) {
  const auto phi = CutoffProfile::two_sided(3.0);
  EXPECT_EQ(phi(-1.0), 0.0);
  EXPECT_EQ(phi(-5.0), 0.0);
  EXPECT_EQ(phi(0.0), 1.0);
  EXPECT_EQ(phi(6.0), 1.0);
  EXPECT_EQ(phi(7.0), 0.0);
  EXPECT_EQ(phi(9.0), 0.0);
  EXPECT_EQ(CutoffProfile::right_open()(5.0), 1.0);
  EXPECT_EQ(CutoffProfile::right_open()(-1.0), 0.0);
  EXPECT_THROW((void)CutoffProfile::two_sided(-1.0), RangeError);
}

TEST(Cutoff, SlopeBounds) {
  const auto phi = CutoffProfile::two_sided(1.5);
  double max_left = 0.0, min_right = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double s = -2.0 + 7.0 * i / 100000.0;
    const double d = phi.derivative(s);
    if (s < 1.5) {
      max_left = std::max(max_left, d);
      EXPECT_GE(d, 0.0);
    } else {
      min_right = std::min(min_right, d);
      EXPECT_LE(d, 0.0);
    }
    // difference quotient agrees with the derivative
    const double e = 1e-6;
    EXPECT_NEAR((phi(s + e) - phi(s - e)) / (2 * e), d, 1e-5);
  }
  EXPECT_LE(max_left, 2.0);
  EXPECT_GE(min_right, -2.0);
  EXPECT_NEAR(max_left, 1.5, 1e-6);
}

TEST(ModewiseBvp, ZeroForcing) {
  const auto w = modewise_bvp(-1.3, std::vector<Complex>(50), 0.05);
  for (const auto& z : w) EXPECT_EQ(z, Complex{});
  EXPECT_THROW((void)modewise_bvp(0.0, std::vector<Complex>(5), 0.05), RangeError);
}

TEST(ModewiseBvp, IndicatorClosedForm) {
  // λ = −2, f = 1 on [0,1]: w(1) = (1 − e^{−2})/2. Linear interpolation of a
  // step smears one cell, so sample the indicator on a fine grid.
  const double ds = 1e-4;
  std::vector<Complex> f;
  for (int j = 0; j <= 20000; ++j) {
    const double s = -0.5 + j * ds;
    f.emplace_back(s >= 0.0 && s <= 1.0 ? 1.0 : 0.0);
  }
  const auto w = modewise_bvp(-2.0, f, ds);
  EXPECT_NEAR(w[15000].real(), (1.0 - std::exp(-2.0)) / 2.0, 1e-4);
  EXPECT_NEAR(w[15000].real(), 0.43233, 1e-4);
}

TEST(ModewiseBvp, ExactForLinearForcing) {
  // constant forcing is interpolated exactly and the bounded solution is −f/λ
  std::vector<Complex> f(200, Complex(0.3, -0.4));
  for (double lambda : {-3.0, -1e-4, 1e-4, 2.0}) {
    const auto w = modewise_bvp(lambda, f, 0.05);
    for (const auto& z : w) EXPECT_NEAR(std::abs(z + f[0] / lambda), 0.0, 1e-9 * std::abs(f[0] / lambda));
  }
}

TEST(ModewiseBvp, RandomInstancesMatchDenseIntegratorAndSupBound) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  double worst_error = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const double mag = std::pow(10.0, -3.0 + 5.0 * unit(rng));
    const double lambda = unit(rng) < 0.5 ? -mag : mag;
    const double c = 0.2 + 0.6 * unit(rng), width = 0.1 + 0.2 * unit(rng), omega = 10.0 * unit(rng);
    const Complex amp = std::polar(0.5 + unit(rng), 6.28 * unit(rng));
    auto f = [&](double s) { return amp * bump(s, c, width) * std::polar(1.0, omega * s); };
    const double s0 = -0.5, s1 = 1.5, ds = 5e-4;
    std::vector<Complex> samples;
    for (int j = 0; j <= 4000; ++j) samples.push_back(f(s0 + j * ds));
    const auto w = modewise_bvp(lambda, samples, ds);
    const auto ref = dense_reference(lambda, f, s0, s1, ds, 4);
    double err = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) err = std::max(err, std::abs(w[j] - ref[j]));
    worst_error = std::max(worst_error, err);
    if (sup_abs(ref) > std::sqrt(2.0) * sup_abs(samples) / std::abs(lambda)) ++violations;
  }
  EXPECT_EQ(violations, 0);
  EXPECT_LE(worst_error, 1e-6);
}

TEST(FloerIterate, ZeroSpecGivesZeroCurve) {
  auto params = golden_model();
  NonlinearitySpec spec;
  spec.profile.coeffs = {0.0};
  Nonlinearity nl(spec, params);
  HBProblem prob(nl, 3, 3);
  auto curve = floer_iterate(prob, CutoffProfile::two_sided(1.0));
  EXPECT_TRUE(curve.converged);
  EXPECT_EQ(curve.iterations, 1);
  for (const auto& U : curve.slices) EXPECT_EQ(U.norm(), 0.0);
  auto diag = floer_diagnostics(curve, prob, {1, 2}, 10);
  EXPECT_EQ(diag.energy, 0.0);
  EXPECT_TRUE(diag.energy_passed);
}

TEST(FloerIterate, LinearOneSidedReachesClosedForm) {
  auto params = golden_model();
  const auto c = potential(2, 2);
  Nonlinearity nl(linear_spec(c, 0.2), params);
  HBProblem prob(nl, 3, 3);
  FloerConfig cfg;
  cfg.s_min = -60.0;
  cfg.s_max = 40.0;
  auto curve = floer_iterate(prob, CutoffProfile::right_open(), cfg);
  EXPECT_TRUE(curve.converged);
  EXPECT_LE(curve.iterations, 2);
  const auto exact = linear_forced_solve(0.2 * c, params, 3, 3);
  EXPECT_LE((curve.right_asymptote - exact).norm(), 1e-6);
  EXPECT_LE(curve.left_asymptote.norm(), 1e-6);
  EXPECT_EQ(curve.sup_bound_violations, 0);
}

TEST(FloerIterate, CubicAgreesWithHarmonicBalance) {
  auto params = golden_model();
  Nonlinearity nl(cubic_forced(0.05), params);
  HBProblem prob(nl, 6, 6);
  FloerConfig cfg;
  cfg.s_min = -50.0;
  cfg.s_max = 40.0;
  auto curve = floer_iterate(prob, CutoffProfile::right_open(), cfg);
  ASSERT_TRUE(curve.converged);
  EXPECT_TRUE(curve.contractive);
  EXPECT_EQ(curve.sup_bound_violations, 0);
  auto hb = hb_solve(prob);
  EXPECT_LE((curve.right_asymptote - hb.U).norm(), 1e-5);
  auto diag = floer_diagnostics(curve, prob, {1, 2, 4});
  EXPECT_LE(diag.right_residual, 1e-5);
  EXPECT_LE(diag.left_norm, 1e-6);
  EXPECT_TRUE(diag.energy_passed) << diag.energy << " vs " << diag.energy_bound;
  // the two energy quadratures agree up to the O(ds²) s-differencing error
  EXPECT_NEAR(diag.energy, diag.energy_spectral, 1e-2 * diag.energy_spectral);
  EXPECT_GT(diag.energy, 0.0);
}

TEST(FloerIterate, PlateauIndependence) {
  // Forcing only on modes with |λ| ≥ 2 keeps the ramp influence within e^{−4}
  // per unit length, so the plateau forgets where it ends.
  auto params = golden_model();
  SpaceTimeField c(1, 3, Gauge::physical);
  c(0, 2) = 0.3;
  c(1, -3) = 0.2;
  NonlinearitySpec spec = linear_spec(c, 1.0);
  spec.profile.coeffs = {0.0, 0.0, 0.5};
  spec.amplitude = 0.05;
  spec = cutoff_wrap(spec, 1.0);
  Nonlinearity nl(spec, params);
  HBProblem prob(nl, 2, 4);
  auto a = floer_iterate(prob, CutoffProfile::two_sided(3.0));
  auto b = floer_iterate(prob, CutoffProfile::two_sided(5.0));
  EXPECT_LE(curve_difference(a, b, 0.0, 2 * 3.0 - 2.0), 1e-4);
  // both come back to zero at the right end
  EXPECT_LE(a.slices.back().norm(), 1e-6);
}

TEST(FloerDiagnostics, TailLadderDecreases) {
  auto params = golden_model();
  Nonlinearity nl(cubic_forced(0.05), params);
  HBProblem prob(nl, 4, 12);
  FloerConfig cfg;
  cfg.s_min = -50.0;
  auto curve = floer_iterate(prob, CutoffProfile::right_open(), cfg);
  auto diag = floer_diagnostics(curve, prob, {2, 4, 8}, 20);
  ASSERT_EQ(diag.tail.size(), 3u);
  EXPECT_TRUE(diag.tail_monotone);
  EXPECT_TRUE(diag.tail_bounded);
  EXPECT_GT(diag.tail[0].statistic, diag.tail[2].statistic);
}

TEST(FloerCurve, Csv) {
  FloerCurve curve;
  curve.s = {0.0};
  curve.slices = {SpaceTimeField(1, 1)};
  curve.slices[0](1, -1) = Complex(0.5, 0.25);
  std::ostringstream out;
  curve.write_csv(out);
  EXPECT_EQ(out.str(), "s,p,n,re,im\n0,1,-1,0.5,0.25\n");
}

}  // namespace
}  // namespace hampde
