#pragma once

#include <fftw3.h>

#include <boost/version.hpp>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hampde/config.hpp"
#include "hampde/diophantine.hpp"
#include "hampde/dynamics.hpp"
#include "hampde/floer.hpp"
#include "hampde/periodic.hpp"

#ifndef HAMPDE_VERSION
#define HAMPDE_VERSION "0.1.0"
#endif

namespace hampde::cli {

namespace fs = std::filesystem;

enum ExitCode : int { pass = 0, usage_error = 1, check_failed = 2 };

struct Flags {
  int jobs = 1;
  bool trace = false;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"diophantine", "counterexample",    "linear-solve", "solve-periodic",
                                              "floer",       "convergence-study", "flow"};
  return names;
}

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

inline std::string rational_text(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" + boost::multiprecision::denominator(q).str();
}

/// Accepts integers and scientific forms such as "1e30".
inline BigInt parse_depth(const std::string& text) {
  try {
    HighReal value(text);
    if (!(value >= 1)) throw ConfigError("diophantine.scan_depth must be >= 1");
    return boost::multiprecision::floor(value).convert_to<BigInt>();
  } catch (const std::runtime_error&) {
    throw ConfigError("diophantine.scan_depth '" + text + "' is not a number");
  }
}

/// Shared state of one command run: where artifacts go and which checks ran.
class Run {
 public:
  Run(std::string command, RunConfig cfg, const Flags& flags)
      : command_(std::move(command)), cfg_(std::move(cfg)), flags_(flags) {
    if (flags.seed) cfg_.seed = *flags.seed;
    if (flags.output) {
      out_ = *flags.output;
    } else if (const char* env = std::getenv("OUTPUT_DIR"); env != nullptr && *env != '\0') {
      out_ = env;
    } else {
      out_ = cfg_.output_dir;
    }
    fs::create_directories(out_);
    report_["command"] = command_;
  }

  [[nodiscard]] const RunConfig& config() const { return cfg_; }
  [[nodiscard]] const Flags& flags() const { return flags_; }
  [[nodiscard]] const fs::path& out() const { return out_; }
  json& report() { return report_; }

  void check(const std::string& name, bool ok) { checks_[name] = ok; }

  void write_text(const std::string& name, const std::string& body) {
    std::ofstream f(out_ / name, std::ios::binary);
    f << body;
    artifacts_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }
  template <class Writer>
  void write_csv(const std::string& name, Writer&& writer) {
    std::ostringstream s;
    writer(s);
    write_text(name, s.str());
  }

  int finish(double seconds) {
    bool ok = true;
    json checks = json::object();
    for (const auto& [name, passed] : checks_) {
      checks[name] = passed;
      ok = ok && passed;
    }
    report_["checks"] = checks;
    report_["passed"] = ok;
    write_json("report.json", report_);

    json manifest;
    manifest["command"] = command_;
    manifest["config_hash"] = fnv1a_hex(to_json(cfg_).dump());
    manifest["config"] = to_json(cfg_);
    manifest["seed"] = cfg_.seed;
    manifest["versions"] = {{"hampde", HAMPDE_VERSION}, {"fftw", std::string(fftw_version)}, {"boost", std::string(BOOST_LIB_VERSION)}};
    manifest["precision_bits"] = kPrecisionBits;
    manifest["timings"] = {{"total_seconds", seconds}};
    manifest["artifacts"] = artifacts_;
    manifest["exit_code"] = ok ? pass : check_failed;
    std::ofstream f(out_ / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << "\n";
    return ok ? pass : check_failed;
  }

 private:
  std::string command_;
  RunConfig cfg_;
  Flags flags_;
  fs::path out_;
  json report_;
  std::map<std::string, bool> checks_;
  std::vector<std::string> artifacts_;
};

inline json field_summary(const SpaceTimeField& U) {
  return {{"P", U.P()}, {"N", U.N()}, {"gauge", to_string(U.gauge())}, {"norm", U.norm()}};
}

inline json audit_json(const DecayAudit& a) {
  return {{"shell_max", a.shell_max},
          {"monotone_tail", a.monotone_tail},
          {"regularity_norm", a.regularity_norm},
          {"regularity_index", a.regularity_index},
          {"noise_floor", a.noise_floor}};
}

/// True when ∇F_t(0) is nonzero at some sampled time.
inline bool forced_at_zero(const Nonlinearity& nl, int N) {
  const double T = nl.params().T();
  for (int k = 0; k < 8; ++k) {
    auto g = nl.grad(SpectralField(N), T * k / 8);
    g[0] = Complex{};
    if (scale_norm(g, 0.0) > 0.0) return true;
  }
  return false;
}

// --- commands -----------------------------------------------------------------

inline void cmd_diophantine(Run& run) {
  const auto& c = run.config();
  const auto params = build_model(c);
  const auto depth = parse_depth(c.diophantine.scan_depth);
  const auto adm = check_admissible(params, depth, c.diophantine.kappa);
  json a = {{"verdict", to_string(adm.verdict)},
            {"depth", adm.depth.str()},
            {"precision_bits", adm.precision_bits},
            {"max_exponent", adm.max_exponent},
            {"max_excess", adm.max_excess},
            {"evidence", adm.evidence}};
  if (adm.witness) a["witness"] = {{"q", adm.witness->q.str()}, {"p", adm.witness->p.str()}, {"exponent", adm.witness->exponent}};
  run.report()["admissibility"] = a;
  run.check("admissible", adm.verdict == Verdict::admissible_at_depth);

  long long P_scan = c.diophantine.P_scan;
  if (P_scan == 0) {
    P_scan = static_cast<long long>(std::ceil(params.ratio().to_double() * std::pow(c.diophantine.N_scan, params.d()))) + 2;
  }
  try {
    const auto table = divisor_scan(params, c.diophantine.N_scan, P_scan);
    run.write_csv("divisors.csv", [&](std::ostream& o) { table.write_csv(o); });
    run.report()["divisor_scan"] = {{"N_scan", c.diophantine.N_scan},
                                    {"P_scan", P_scan},
                                    {"fitted_exponent", table.fitted_exponent},
                                    {"fitted_constant", table.fitted_constant},
                                    {"bound_exponent", table.bound_exponent},
                                    {"infimum_constant", table.infimum_constant},
                                    {"bound_holds", table.bound_holds}};
    run.check("divisor_bound", table.bound_holds);
  } catch (const ResonanceError& e) {
    run.report()["divisor_scan"] = {{"resonance", {{"p", e.p()}, {"n", e.n()}}}, {"message", e.what()}};
    run.check("resonance_free", false);
  }
}

inline void cmd_counterexample(Run& run) {
  const auto& c = run.config();
  const auto ce = counterexample_generate(build_schedule(c.counterexample));
  run.write_csv("counterexample.csv", [&](std::ostream& o) {
    o << "k,p,q,forcing,exponent,solution\n" << std::setprecision(17);
    for (std::size_t k = 0; k < ce.modes.size(); ++k) {
      const auto& m = ce.modes[k];
      o << k << ',' << m.p.str() << ',' << m.q.str() << ',' << m.forcing << ',' << m.exponent << ','
        << rational_text(m.solution) << '\n';
    }
  });
  std::vector<double> exponents;
  for (const auto& m : ce.modes) exponents.push_back(m.exponent);
  run.report()["counterexample"] = {{"schedule", c.counterexample.schedule},
                                    {"ratio_T_over_X", rational_text(ce.ratio)},
                                    {"modes", ce.modes.size()},
                                    {"exponents", exponents},
                                    {"smooth", ce.smooth},
                                    {"solution_is_one", ce.solution_is_one}};
  run.check("solution_is_one", ce.solution_is_one);
  run.check("smooth", ce.smooth);
}

inline void cmd_linear_solve(Run& run) {
  const auto& c = run.config();
  const auto params = build_model(c);
  const auto spec = build_spec(c, params);
  const int P = c.solver.P, N = c.solver.N;
  const auto U = linear_forced_solve(spec.amplitude * spec.potential, params, P, N);
  const auto audit = decay_audit(U, params);
  run.write_json("solution.json", {{"twisted", to_json(U)}, {"physical", to_json(gauge_transform(U, Gauge::physical))}});
  run.write_csv("audit.csv", [&](std::ostream& o) { audit.write_csv(o); });
  run.report()["solution"] = field_summary(U);
  run.report()["smallest_divisor"] = window_min_divisor(params, P, N);
  run.report()["audit"] = audit_json(audit);
  run.check("monotone_tail", audit.monotone_tail);
}

inline void cmd_solve_periodic(Run& run) {
  const auto& c = run.config();
  const auto params = build_model(c);
  params.validate_for_solvers();
  const Nonlinearity nl(build_spec(c, params), params);
  const int P = c.solver.P, N = c.solver.N;
  HBProblem prob(nl, P, N, c.solver.numerics);
  run.report()["smallest_divisor"] = prob.min_divisor();
  HBResult res;
  try {
    res = hb_solve(prob);
  } catch (const ConvergenceError& e) {
    run.report()["error"] = e.what();
    run.check("converged", false);
    return;
  }
  const auto audit = decay_audit(res.U, params);
  const HamiltonianSystem sys(nl, c.flow.numerics);
  const double defect = flow_round_trip_defect(res.U, sys, c.checks.round_trip_steps);
  const bool forced = forced_at_zero(nl, N);

  run.write_json("solution.json", {{"twisted", to_json(res.U)}, {"physical", to_json(res.physical)}});
  run.write_csv("audit.csv", [&](std::ostream& o) { audit.write_csv(o); });
  if (run.flags().trace) {
    run.write_csv("newton.csv", [&](std::ostream& o) {
      o << "iteration,residual\n" << std::setprecision(17);
      for (std::size_t k = 0; k < res.residual_history.size(); ++k) o << k << ',' << res.residual_history[k] << '\n';
    });
  }
  auto& r = run.report();
  r["solution"] = field_summary(res.U);
  r["trivial"] = res.trivial;
  r["forced_at_zero"] = forced;
  r["residual"] = res.residual;
  r["residual_history"] = res.residual_history;
  r["newton_iterations"] = res.newton_iterations;
  r["krylov_iterations"] = res.krylov_iterations;
  r["round_trip_defect"] = defect;
  r["round_trip_steps"] = c.checks.round_trip_steps;
  r["regularity_norm"] = audit.regularity_norm;
  r["audit"] = audit_json(audit);

  run.check("converged", res.residual <= c.solver.numerics.newton_tol);
  run.check("round_trip", defect <= c.checks.round_trip_tol);
  run.check("nontrivial", !forced || res.U.norm() > 0.0);
  run.check("monotone_tail", audit.monotone_tail);
}

inline void cmd_floer(Run& run) {
  const auto& c = run.config();
  const auto params = build_model(c);
  params.validate_for_solvers();
  const Nonlinearity nl(build_spec(c, params), params);
  HBProblem prob(nl, c.solver.P, c.solver.N, c.solver.numerics);
  const auto profile = c.floer.tau ? CutoffProfile::two_sided(*c.floer.tau) : CutoffProfile::right_open();
  FloerConfig fc;
  fc.s_min = c.floer.s_min;
  fc.s_max = c.floer.s_max;
  fc.ds = c.floer.ds;
  fc.max_picard = c.floer.max_picard;
  fc.tol = c.floer.tol;
  fc.plateau = c.floer.plateau;

  FloerCurve curve;
  try {
    curve = floer_iterate(prob, profile, fc);
  } catch (const ConvergenceError& e) {
    run.report()["error"] = e.what();
    run.check("converged", false);
    return;
  }
  const auto diag = floer_diagnostics(curve, prob, c.floer.ladder, c.floer.ball_samples, c.seed);
  auto& r = run.report();
  r["curve"] = {{"s_min", curve.s.front()},
                {"s_max", curve.s.back()},
                {"ds", curve.ds()},
                {"slices", curve.s.size()},
                {"one_sided", profile.one_sided},
                {"tau", profile.tau},
                {"iterations", curve.iterations},
                {"change_history", curve.change_history},
                {"contraction_estimate", curve.contraction_estimate},
                {"contractive", curve.contractive},
                {"sup_bound_checks", curve.sup_bound_checks},
                {"sup_bound_violations", curve.sup_bound_violations},
                {"sup_bound_worst_ratio", curve.sup_bound_worst_ratio}};
  json tail = json::array();
  for (const auto& row : diag.tail) tail.push_back({{"ell", row.ell}, {"statistic", row.statistic}, {"scaled", row.scaled}});
  r["diagnostics"] = {{"energy", diag.energy},
                      {"energy_spectral", diag.energy_spectral},
                      {"sup_F", diag.sup_F},
                      {"energy_bound", diag.energy_bound},
                      {"tail", tail},
                      {"tail_monotone", diag.tail_monotone},
                      {"tail_bounded", diag.tail_bounded},
                      {"right_residual", diag.right_residual},
                      {"left_norm", diag.left_norm},
                      {"right_audit", audit_json(diag.right_audit)}};
  if (!profile.one_sided) {
    r["note"] = "two-sided cutoff: the right asymptote is the plateau average, not a periodic orbit";
  }

  run.write_json("curve.json", {{"csv", "curve.csv"},
                                {"columns", {"s", "p", "n", "re", "im"}},
                                {"threshold", 1e-12},
                                {"P", prob.P()},
                                {"N", prob.N()},
                                {"gauge", "twisted"},
                                {"right_asymptote", to_json(curve.right_asymptote)}});
  run.write_csv("curve.csv", [&](std::ostream& o) { curve.write_csv(o); });

  run.check("converged", curve.converged);
  run.check("sup_bound", curve.sup_bound_violations == 0);
  run.check("left_asymptote", diag.left_norm <= c.checks.left_tol);
  run.check("energy_bound", diag.energy_passed);
  run.check("tail_monotone", diag.tail_monotone);
  run.check("tail_bounded", diag.tail_bounded);
  if (profile.one_sided) run.check("right_asymptote_residual", diag.right_residual <= c.checks.right_tol);
}

struct StudyRow {
  int N = 0;
  int P = 0;
  int newton = 0;
  double residual = 0.0;
  double norm = 0.0;
  double tail = 0.0;  // |Û| over max(|p|/P, |n|/N) > 1/2
  double regularity_norm = 0.0;
  double difference = 0.0;  // against the previous rung, on the smaller window
  SpaceTimeField U;
};

inline void cmd_convergence_study(Run& run) {
  const auto& c = run.config();
  const auto params = build_model(c);
  params.validate_for_solvers();
  const Nonlinearity nl(build_spec(c, params), params);
  const auto& ladder = c.convergence_study.ladder;
  if (ladder.empty()) throw ConfigError("convergence_study.ladder is empty");

  auto solve = [&](int N, int P) {
    StudyRow row;
    row.N = N;
    row.P = P;
    HBProblem prob(nl, P, N, c.solver.numerics);
    auto res = hb_solve(prob);
    row.newton = res.newton_iterations;
    row.residual = res.residual;
    row.norm = res.U.norm();
    double tail = 0.0;
    for (int p = -P; p <= P; ++p) {
      for (int n = -N; n <= N; ++n) {
        if (2 * std::abs(n) > N || 2 * std::abs(p) > P) tail += std::norm(res.U(p, n));
      }
    }
    row.tail = std::sqrt(tail);
    row.regularity_norm = decay_audit(res.U, params).regularity_norm;
    row.U = std::move(res.U);
    return row;
  };

  // rungs are independent solves; at most `jobs` run at once
  std::vector<StudyRow> rows(ladder.size());
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, run.flags().jobs));
  try {
    for (std::size_t start = 0; start < ladder.size(); start += jobs) {
      std::vector<std::future<StudyRow>> batch;
      for (std::size_t k = start; k < std::min(ladder.size(), start + jobs); ++k) {
        batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, solve, ladder[k][0], ladder[k][1]));
      }
      for (std::size_t k = 0; k < batch.size(); ++k) rows[start + k] = batch[k].get();
    }
  } catch (const ConvergenceError& e) {
    run.report()["error"] = e.what();
    run.check("converged", false);
    return;
  }
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& prev = rows[k - 1].U;
    rows[k].difference = (rows[k].U.resized(prev.P(), prev.N()) - prev).norm();
  }
  run.write_csv("convergence.csv", [&](std::ostream& o) {
    o << "N,P,newton,residual,norm,tail,regularity_norm,difference\n" << std::setprecision(17);
    for (const auto& r : rows) {
      o << r.N << ',' << r.P << ',' << r.newton << ',' << r.residual << ',' << r.norm << ',' << r.tail << ','
        << r.regularity_norm << ',' << r.difference << '\n';
    }
  });
  json table = json::array();
  bool decreasing = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    table.push_back({{"N", r.N}, {"P", r.P}, {"residual", r.residual}, {"tail", r.tail}, {"difference", r.difference}});
    if (k > 0 && r.tail > 1.1 * rows[k - 1].tail) decreasing = false;
  }
  run.report()["ladder"] = table;
  bool converged = true;
  for (const auto& r : rows) converged = converged && r.residual <= c.solver.numerics.newton_tol;
  run.check("converged", converged);
  run.check("tail_decreasing", decreasing);
}

inline void cmd_flow(Run& run) {
  const auto& c = run.config();
  const auto params = build_model(c);
  const Nonlinearity nl(build_spec(c, params), params);
  const HamiltonianSystem sys(nl, c.flow.numerics);
  const int N = c.solver.N;
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField u0(N);
  for (int n = -N; n <= N; ++n) {
    if (n != 0 || !c.flow.numerics.project_zero_mode) u0[n] = Complex(g(rng), g(rng)) / std::pow(scale_weight(n), 3.0);
  }
  if (scale_norm(u0, 0.0) > 0.0) u0 *= c.flow.initial_amplitude / scale_norm(u0, 0.0);
  const double t1 = c.flow.periods * params.T();
  std::vector<TraceRow> trace;
  const auto u1 = flow_map(u0, 0.0, t1, sys, run.flags().trace ? &trace : nullptr);
  if (run.flags().trace) run.write_csv("trace.csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
  run.write_json("solution.json", {{"initial", to_json(u0)}, {"final", to_json(u1)}});
  run.report()["flow"] = {{"t1", t1},
                          {"steps", step_count(0.0, t1, c.flow.numerics.dt(params))},
                          {"norm_initial", scale_norm(u0, 0.0)},
                          {"norm_final", scale_norm(u1, 0.0)},
                          {"energy_initial", sys.energy(u0, 0.0)},
                          {"energy_final", sys.energy(u1, t1)}};
  run.check("finite", std::isfinite(scale_norm(u1, 0.0)));
}

/// Runs one command; returns the process exit code.
inline int run(const std::string& command, const RunConfig& cfg, const Flags& flags, std::ostream& err = std::cerr) {
  static const std::map<std::string, std::function<void(Run&)>> table{
      {"diophantine", cmd_diophantine},       {"counterexample", cmd_counterexample},
      {"linear-solve", cmd_linear_solve},     {"solve-periodic", cmd_solve_periodic},
      {"floer", cmd_floer},                   {"convergence-study", cmd_convergence_study},
      {"flow", cmd_flow}};
  const auto it = table.find(command);
  if (it == table.end()) {
    err << "error: unknown command '" << command << "'\n";
    return usage_error;
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    Run r(command, cfg, flags);
    try {
      it->second(r);
    } catch (const ResonanceError& e) {
      r.report()["error"] = e.what();
      r.report()["resonance"] = {{"p", e.p()}, {"n", e.n()}};
      r.check("resonance_free", false);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r.finish(seconds);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const RangeError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const GridError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
  }
  return usage_error;
}

inline int run(const std::string& command, const fs::path& config_path, const Flags& flags,
               std::ostream& err = std::cerr) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return usage_error;
  }
  return run(command, cfg, flags, err);
}

}  // namespace hampde::cli
