// Acceptance run: one PASS/FAIL line per criterion, then a summary line.
// Exit status is 0 only when every criterion passes.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hampde/config.hpp"
#include "hampde/diophantine.hpp"
#include "hampde/dynamics.hpp"
#include "hampde/floer.hpp"
#include "hampde/periodic.hpp"

using namespace hampde;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SpectralField random_mean_free(std::mt19937_64& rng, int N, double decay) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField u(N);
  for (int n = -N; n <= N; ++n) {
    if (n != 0) u[n] = Complex(g(rng), g(rng)) * std::pow(scale_weight(n), -decay);
  }
  return u;
}

SpectralField at_radius(SpectralField u, double r2, double h) {
  u *= std::sqrt(r2) / scale_norm(u, -h);
  return u;
}

double bump(double s, double c, double width) {
  const double y = (s - c) / width;
  return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0;
}

// Bounded solution of w' = λw + f by RK4 on a grid `refine` times finer than ds,
// started on the side where the homogeneous solution decays into the support.
std::vector<Complex> dense_decaying_solution(double lambda, const std::function<Complex(double)>& f, double s0,
                                             double s1, double ds, int refine) {
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
  Complex w{};
  if (lambda < 0) {
    out[0] = w;
    for (int j = 0; j < cells; ++j) {
      for (int k = 0; k < refine; ++k) w = rk4(w, s0 + j * ds + k * h, h);
      out[static_cast<std::size_t>(j + 1)] = w;
    }
  } else {
    out[static_cast<std::size_t>(cells)] = w;
    for (int j = cells; j > 0; --j) {
      for (int k = 0; k < refine; ++k) w = rk4(w, s0 + j * ds - k * h, -h);
      out[static_cast<std::size_t>(j - 1)] = w;
    }
  }
  return out;
}

Outcome modewise_bound() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  double worst_error = 0.0, worst_ratio = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double mag = std::pow(10.0, -3.0 + 5.0 * unit(rng));
    const double lambda = unit(rng) < 0.5 ? -mag : mag;
    // f: a modulated sum of two bumps supported inside [0, 1]
    const double c1 = 0.2 + 0.3 * unit(rng), c2 = 0.5 + 0.3 * unit(rng);
    const double w1 = 0.05 + 0.15 * unit(rng), w2 = 0.05 + 0.15 * unit(rng), omega = 20.0 * unit(rng);
    const Complex a1 = std::polar(0.5 + unit(rng), 6.28 * unit(rng));
    const Complex a2 = std::polar(0.5 * unit(rng), 6.28 * unit(rng));
    auto f = [&](double s) { return (a1 * bump(s, c1, w1) + a2 * bump(s, c2, w2)) * std::polar(1.0, omega * s); };
    const double s0 = -0.5, s1 = 1.5, ds = 5e-4;
    const int cells = static_cast<int>(std::llround((s1 - s0) / ds));
    std::vector<Complex> samples;
    for (int j = 0; j <= cells; ++j) samples.push_back(f(s0 + j * ds));
    const auto w = modewise_bvp(lambda, samples, ds);
    const auto ref = dense_decaying_solution(lambda, f, s0, s1, ds, 4);
    double err = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) err = std::max(err, std::abs(w[j] - ref[j]));
    worst_error = std::max(worst_error, err);
    const double ratio = sup_abs(ref) * std::abs(lambda) / (std::sqrt(2.0) * sup_abs(samples));
    worst_ratio = std::max(worst_ratio, ratio);
    if (ratio > 1.0) ++violations;
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && worst_error <= 1e-6 && secs < 30.0,
          "1000 instances, violations " + std::to_string(violations) + ", worst sup|w|/bound " + fmt(worst_ratio) +
              ", sup error vs dense RK4 " + fmt(worst_error) + ", " + fmt(secs) + " s"};
}

Outcome small_divisor_law() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto golden = parse_enclosure("golden");
  const auto d1 = ModelParams::from_ratio(2.0 * std::numbers::pi, golden, 1, 5.5, 2.0, EquationKind::nls);
  const auto d2 = ModelParams::from_ratio(2.0 * std::numbers::pi, golden, 2, 5.5, 2.0, EquationKind::nls);
  const int N = 256;
  const auto P_for = [&](int d) {
    return static_cast<long long>(std::ceil(golden.to_double() * std::pow(N, d))) + 2;
  };
  const auto one = divisor_scan(d1, N, P_for(1));
  const auto two = divisor_scan(d2, N, P_for(2));
  const double secs = seconds_since(t0);
  const bool ok = one.fitted_exponent >= -1.1 && one.fitted_exponent <= -0.9 && one.bound_holds &&
                  one.infimum_constant > 0 && two.bound_exponent == 2.0 && two.bound_holds &&
                  two.infimum_constant > 0 && secs < 10.0;
  return {ok, "d=1 fitted exponent " + fmt(one.fitted_exponent) + ", c " + fmt(one.infimum_constant) +
                  "; d=2 exponent " + fmt(-two.bound_exponent) + " bound " + (two.bound_holds ? "holds" : "fails") +
                  ", c " + fmt(two.infimum_constant) + ", " + fmt(secs) + " s"};
}

Outcome counterexample() {
  const auto liouville = counterexample_generate(liouville_schedule(7));
  const auto golden = counterexample_generate(golden_schedule(30));
  const bool ok = liouville.smooth && liouville.solution_is_one && !golden.smooth;
  std::string exps;
  for (const auto& m : liouville.modes) exps += (exps.empty() ? "" : " ") + fmt(m.exponent);
  return {ok, std::string("liouville smooth ") + (liouville.smooth ? "yes" : "no") + ", solution = 1 on " +
                  std::to_string(liouville.modes.size()) + " modes " + (liouville.solution_is_one ? "exactly" : "NO") +
                  " (exponents " + exps + "); golden smooth " + (golden.smooth ? "yes" : "no")};
}

/// Shared state of the reference runs, so later criteria reuse the solve.
struct Reference {
  RunConfig cfg;
  ModelParams params;
  Nonlinearity nl;
  HBProblem prob;
  HBResult hb;
  double solve_seconds = 0.0;

  explicit Reference(const RunConfig& c)
      : cfg(c),
        params(build_model(c)),
        nl(build_spec(c, params), params),
        prob(nl, c.solver.P, c.solver.N, c.solver.numerics) {
    const auto t0 = std::chrono::steady_clock::now();
    hb = hb_solve(prob);
    solve_seconds = seconds_since(t0);
  }
};

Outcome periodic_solution(const Reference& ref) {
  const auto t0 = std::chrono::steady_clock::now();
  const HamiltonianSystem sys(ref.nl, ref.cfg.flow.numerics);
  const double defect = flow_round_trip_defect(ref.hb.U, sys, ref.cfg.checks.round_trip_steps);
  const bool forced = scale_norm(ref.nl.grad(SpectralField(ref.prob.N()), 0.0), 0.0) > 0.0;
  const double norm = ref.hb.U.norm();
  const double secs = ref.solve_seconds + seconds_since(t0);
  const bool ok = ref.hb.residual <= 1e-10 && defect <= 1e-6 && (!forced || norm > 1e-3) && secs < 300.0;
  return {ok, "N=P=" + std::to_string(ref.prob.N()) + ", residual " + fmt(ref.hb.residual) + ", round trip " +
                  fmt(defect) + ", |U|0 " + fmt(norm) + (forced ? " (forced)" : " (unforced)") + ", " + fmt(secs) +
                  " s"};
}

Outcome decay_regularity(const Reference& ref) {
  const auto audit = decay_audit(ref.hb.U, ref.params);
  auto fine_cfg = ref.cfg;
  fine_cfg.solver.P = 2 * ref.cfg.solver.P;
  fine_cfg.solver.N = 2 * ref.cfg.solver.N;
  const Reference fine(fine_cfg);
  const auto fine_audit = decay_audit(fine.hb.U, fine.params);
  const double change = std::abs(fine_audit.regularity_norm / audit.regularity_norm - 1.0);
  const bool ok = audit.monotone_tail && change <= 0.20;
  return {ok, std::string("shell maxima ") + (audit.monotone_tail ? "non-increasing" : "INCREASING") + " (" +
                  std::to_string(audit.shell_max.size()) + " shells), |u|_" + fmt(audit.regularity_index) + " " +
                  fmt(audit.regularity_norm) + " at " + std::to_string(ref.prob.N()) + " vs " +
                  fmt(fine_audit.regularity_norm) + " at " + std::to_string(fine.prob.N()) + " (change " +
                  fmt(100 * change) + "%)"};
}

struct FloerRun {
  FloerCurve curve;
  FloerDiagnostics diag;
  double seconds = 0.0;
};

FloerRun run_floer(const Reference& ref) {
  const auto t0 = std::chrono::steady_clock::now();
  FloerConfig fc;
  fc.s_min = ref.cfg.floer.s_min;
  fc.s_max = ref.cfg.floer.s_max;
  fc.ds = ref.cfg.floer.ds;
  fc.max_picard = ref.cfg.floer.max_picard;
  fc.tol = ref.cfg.floer.tol;
  fc.plateau = ref.cfg.floer.plateau;
  FloerRun run;
  run.curve = floer_iterate(ref.prob, CutoffProfile::right_open(), fc);
  run.diag = floer_diagnostics(run.curve, ref.prob, {4, 8, 16, 24}, ref.cfg.floer.ball_samples, ref.cfg.seed);
  run.seconds = seconds_since(t0);
  return run;
}

Outcome floer_curve(const Reference& ref, const FloerRun& run) {
  const double agreement = (run.curve.right_asymptote - ref.hb.U).norm();
  const bool ok = run.curve.converged && run.diag.left_norm <= 1e-6 && agreement <= 1e-5 &&
                  run.diag.energy_passed && run.seconds < 600.0;
  return {ok, "s in [" + fmt(run.curve.s.front()) + ", " + fmt(run.curve.s.back()) + "], " +
                  std::to_string(run.curve.iterations) + " Picard sweeps, left " + fmt(run.diag.left_norm) +
                  ", right vs periodic " + fmt(agreement) + ", E " +
                  fmt(std::max(run.diag.energy, run.diag.energy_spectral)) + " <= " + fmt(run.diag.energy_bound) +
                  ", " + fmt(run.seconds) + " s"};
}

Outcome tail_decrease(const FloerRun& run) {
  std::string stats;
  for (const auto& row : run.diag.tail) stats += (stats.empty() ? "" : " ") + fmt(row.statistic);
  return {run.diag.tail_monotone && run.diag.tail_bounded,
          "tail(4,8,16,24) " + stats + ", scaled ratio " + fmt(run.diag.tail_scaled_ratio)};
}

Outcome flow_identity(const Reference& ref) {
  const auto& params = ref.params;
  const double T = params.T();
  const int N = ref.prob.N();
  const double h = params.h();
  const double R = ref.cfg.nonlinearity.cutoff_radius.value_or(1.0);
  std::mt19937_64 rng(ref.cfg.seed + 8);
  std::uniform_real_distribution<double> radius(0.1 * R, R + 0.9);

  FlowConfig strang = ref.cfg.flow.numerics;
  strang.scheme = Scheme::strang;
  strang.steps_per_period = 512;
  const HamiltonianSystem sys(ref.nl, strang);
  double worst = 0.0;
  std::vector<SpectralField> fields;
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = at_radius(random_mean_free(rng, N, 2.0), radius(rng), h);
    fields.push_back(u);
    const auto physical = flow_map(u, 0.0, T, sys);
    const auto twisted = free_flow(twisted_flow_map(u, 0.0, T, sys), T, params);
    worst = std::max(worst, scale_norm(physical - twisted, 0.0));
  }

  // order of the Strang path against a fine twisted reference
  const auto& u = fields.front();
  const auto reference = free_flow(twisted_flow_map(u, 0.0, T, sys, 8192), T, params);
  std::vector<double> x, y;
  std::string errs;
  for (int steps : {32, 64, 128, 256}) {
    FlowConfig c = strang;
    c.steps_per_period = steps;
    const HamiltonianSystem coarse(ref.nl, c);
    const double e = scale_norm(flow_map(u, 0.0, T, coarse) - reference, 0.0);
    x.push_back(std::log(static_cast<double>(steps)));
    y.push_back(std::log(e));
    errs += (errs.empty() ? "" : " ") + fmt(e);
  }
  const double slope = -least_squares(x, y).slope;
  const bool ok = worst <= 1e-8 && slope >= 1.8 && slope <= 2.2;
  return {ok, "worst two-path gap at T/512 " + fmt(worst) + " over 20 fields, Strang errors (32..256) " + errs +
                  ", order " + fmt(slope)};
}

double relative_fd_error(const std::function<double(const SpectralField&)>& F, const SpectralField& g,
                         const SpectralField& u, const SpectralField& v) {
  const double eps = 1e-5;
  const double fd = (F(u + Complex(eps) * v) - F(u - Complex(eps) * v)) / (2 * eps);
  const double scale = std::max(scale_norm(g, 0.0) * scale_norm(v, 0.0), 1e-300);
  return std::abs(fd - g.dot(v)) / scale;
}

Outcome gradient_oracles(const Reference& ref) {
  const auto& params = ref.params;
  const int N = std::min(ref.prob.N(), 16);
  const double h = params.h();
  const double R = ref.cfg.nonlinearity.cutoff_radius.value_or(1.0);
  std::mt19937_64 rng(ref.cfg.seed + 9);
  std::uniform_real_distribution<double> time(0.0, params.T()), plateau(0.05 * R, R), ramp(R + 0.02, R + 0.98);
  double worst_F = 0.0, worst_G = 0.0;
  int in_ramp = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const bool ramp_case = trial % 2 == 1;
    const double r2 = ramp_case ? ramp(rng) : plateau(rng);
    in_ramp += ramp_case ? 1 : 0;
    const auto u = at_radius(random_mean_free(rng, N, 1.0), r2, h);
    const auto v = random_mean_free(rng, N, 1.0);
    const double t = time(rng);
    worst_F = std::max(worst_F, relative_fd_error([&](const SpectralField& w) { return ref.nl.F(w, t); },
                                                  ref.nl.grad(u, t), u, v));
    worst_G = std::max(worst_G, relative_fd_error([&](const SpectralField& w) { return ref.nl.G(w, t); },
                                                  ref.nl.grad_G(u, t), u, v));
  }
  return {worst_F <= 1e-6 && worst_G <= 1e-6, "100 directions (" + std::to_string(in_ramp) +
                                                   " in the cutoff ramp), worst relative error grad_F " +
                                                   fmt(worst_F) + ", grad_G " + fmt(worst_G)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string config = std::string(HAMPDE_CONFIG_DIR) + "/nls_golden.json";
  app.add_option("--config", config, "reference configuration")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  int evaluated = 0;
  auto report = [&](int k, const std::string& name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ++evaluated;
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << k << " " << name << ": " << o.detail << std::endl;
  };

  report(1, "modewise-bound", modewise_bound);
  report(2, "small-divisor-law", small_divisor_law);
  report(3, "counterexample", counterexample);

  const auto cfg = load_config(config);
  std::optional<Reference> ref;
  std::optional<FloerRun> floer;
  try {
    ref.emplace(cfg);
  } catch (const std::exception& e) {
    std::cout << "reference solve failed: " << e.what() << std::endl;
  }
  auto need_ref = [&]() -> const Reference& {
    if (!ref) throw std::runtime_error("no reference solution");
    return *ref;
  };
  auto need_floer = [&]() -> const FloerRun& {
    if (!floer) floer = run_floer(need_ref());
    return *floer;
  };
  report(4, "periodic-solution", [&] { return periodic_solution(need_ref()); });
  report(5, "decay-regularity", [&] { return decay_regularity(need_ref()); });
  report(6, "floer-curve", [&] { return floer_curve(need_ref(), need_floer()); });
  report(7, "tail-decrease", [&] { return tail_decrease(need_floer()); });
  report(8, "flow-identity", [&] { return flow_identity(need_ref()); });
  report(9, "gradient-oracles", [&] { return gradient_oracles(need_ref()); });

  std::cout << "acceptance: " << evaluated << " criteria evaluated, " << (evaluated - failures) << " passed, "
            << failures << " failed" << std::endl;
  return failures == 0 ? 0 : 1;
}
