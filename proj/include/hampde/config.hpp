#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hampde/dynamics.hpp"
#include "hampde/floer.hpp"
#include "hampde/nonlinearity.hpp"
#include "hampde/periodic.hpp"
#include "json.hpp"

namespace hampde {

using json = nlohmann::json;

struct ModelBlock {
  double period_X = 2.0 * std::numbers::pi;
  std::string ratio = "golden";  // aT/2π, any form parse_enclosure accepts
  std::optional<double> period_T;  // overrides ratio when present
  int d = 2;
  double h = 5.5;
  double r = 2.0;
  std::string kind = "nls";
};

struct KernelBlock {
  std::string family = "algebraic";  // algebraic | bump | table
  double beta = 6.0;
  double width = 0.5;
  std::string path;  // table: CSV of n,re,im relative to the config file
};

struct ProfileBlock {
  std::string family = "polynomial";
  std::vector<double> coeffs{0.0, 0.0, 0.5};
  double width = 1.0;
  double m0 = 1.0;
  double mt = 0.0;
  double mx = 0.0;
};

struct PotentialBlock {
  std::string shape = "none";  // none | exponential | table
  double c0 = 0.5;
  int P = 3;
  int N = 3;
  std::vector<std::array<double, 4>> coeffs;  // table rows [p, n, re, im]
};

struct NonlinearityBlock {
  KernelBlock kernel;
  ProfileBlock profile;
  PotentialBlock potential;
  double amplitude = 0.05;
  std::optional<double> cutoff_radius = 1.0;
  int grid_factor = 4;
};

struct SolverBlock {
  int P = 32;
  int N = 32;
  SolverConfig numerics;
};

struct FlowBlock {
  FlowConfig numerics;
  double periods = 1.0;
  double initial_amplitude = 0.1;
};

struct DiophantineBlock {
  std::string scan_depth = "1000000";
  int N_scan = 256;
  long long P_scan = 0;  // 0: just large enough for every minimizer
  double kappa = std::log(10.0);
};

struct CounterexampleBlock {
  std::string schedule = "liouville";  // liouville | golden | powers_of_ten | custom
  int depth = 7;
  std::vector<long long> quotients;  // custom schedule
};

struct FloerBlock {
  std::optional<double> tau;  // absent: one-sided cutoff
  double s_min = -50.0;
  std::optional<double> s_max;
  double ds = 0.05;
  int max_picard = 50;
  double tol = 1e-8;
  double plateau = 2.0;
  std::vector<int> ladder{4, 8, 16, 24};
  int ball_samples = 200;
};

struct StudyBlock {
  std::vector<std::array<int, 2>> ladder{{4, 4}, {8, 8}, {16, 16}, {32, 32}};
};

struct ChecksBlock {
  double round_trip_tol = 1e-6;
  int round_trip_steps = 512;
  double left_tol = 1e-6;
  double right_tol = 1e-5;
};

struct RunConfig {
  ModelBlock model;
  NonlinearityBlock nonlinearity;
  SolverBlock solver;
  FlowBlock flow;
  DiophantineBlock diophantine;
  CounterexampleBlock counterexample;
  FloerBlock floer;
  StudyBlock convergence_study;
  ChecksBlock checks;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  std::filesystem::path base_dir;  // directory of the config file, not serialized
};

// --- dumping ------------------------------------------------------------------

inline json to_json(const SolverConfig& s) {
  return {{"newton_tol", s.newton_tol},     {"max_newton", s.max_newton},
          {"krylov_tol", s.krylov_tol},     {"krylov_max", s.krylov_max},
          {"fd_epsilon", s.fd_epsilon},     {"picard_warmup", s.picard_warmup},
          {"line_search_halvings", s.line_search_halvings}, {"stall_limit", s.stall_limit}};
}

inline json to_json(const RunConfig& c) {
  json j;
  auto& m = j["model"];
  m = {{"period_X", c.model.period_X}, {"ratio", c.model.ratio}, {"d", c.model.d},
       {"h", c.model.h},               {"r", c.model.r},         {"kind", c.model.kind}};
  if (c.model.period_T) m["period_T"] = *c.model.period_T;

  const auto& nb = c.nonlinearity;
  auto& n = j["nonlinearity"];
  n["kernel"] = {{"family", nb.kernel.family}, {"beta", nb.kernel.beta}, {"width", nb.kernel.width},
                 {"path", nb.kernel.path}};
  n["profile"] = {{"family", nb.profile.family}, {"coeffs", nb.profile.coeffs}, {"width", nb.profile.width},
                  {"m0", nb.profile.m0},         {"mt", nb.profile.mt},         {"mx", nb.profile.mx}};
  n["potential"] = {{"shape", nb.potential.shape}, {"c0", nb.potential.c0}, {"P", nb.potential.P},
                    {"N", nb.potential.N},         {"coeffs", nb.potential.coeffs}};
  n["amplitude"] = nb.amplitude;
  n["cutoff_radius"] = nb.cutoff_radius ? json(*nb.cutoff_radius) : json(nullptr);
  n["grid_factor"] = nb.grid_factor;

  j["solver"] = to_json(c.solver.numerics);
  j["solver"]["P"] = c.solver.P;
  j["solver"]["N"] = c.solver.N;

  j["flow"] = {{"steps_per_period", c.flow.numerics.steps_per_period},
               {"scheme", c.flow.numerics.scheme == Scheme::lie ? "lie" : "strang"},
               {"project_zero_mode", c.flow.numerics.project_zero_mode},
               {"periods", c.flow.periods},
               {"initial_amplitude", c.flow.initial_amplitude}};
  j["diophantine"] = {{"scan_depth", c.diophantine.scan_depth}, {"N_scan", c.diophantine.N_scan},
                      {"P_scan", c.diophantine.P_scan},         {"kappa", c.diophantine.kappa}};
  j["counterexample"] = {{"schedule", c.counterexample.schedule}, {"depth", c.counterexample.depth},
                         {"quotients", c.counterexample.quotients}};
  const auto& f = c.floer;
  j["floer"] = {{"tau", f.tau ? json(*f.tau) : json(nullptr)},
                {"s_min", f.s_min},
                {"s_max", f.s_max ? json(*f.s_max) : json(nullptr)},
                {"ds", f.ds},
                {"max_picard", f.max_picard},
                {"tol", f.tol},
                {"plateau", f.plateau},
                {"ladder", f.ladder},
                {"ball_samples", f.ball_samples}};
  j["convergence_study"] = {{"ladder", c.convergence_study.ladder}};
  j["checks"] = {{"round_trip_tol", c.checks.round_trip_tol}, {"round_trip_steps", c.checks.round_trip_steps},
                 {"left_tol", c.checks.left_tol},             {"right_tol", c.checks.right_tol}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

// --- loading ------------------------------------------------------------------

namespace detail {

inline int line_of(const std::string& text, std::size_t pos) {
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

/// Walks the JSON while remembering where each key sits in the source text,
/// so that every error carries a file:line prefix.
class Reader {
 public:
  Reader(const json& node, std::string path, const std::string& text, std::string file, std::size_t pos = 0)
      : node_(&node), path_(std::move(path)), text_(&text), file_(std::move(file)), pos_(pos) {
    if (!node.is_object()) fail("", "expected a table");
  }

  [[nodiscard]] bool has(const std::string& key) const { return node_->contains(key) && !(*node_)[key].is_null(); }

  [[nodiscard]] Reader child(const std::string& key) const {
    static const json empty = json::object();
    const json& sub = node_->contains(key) ? (*node_)[key] : empty;
    return Reader(sub, qualified(key), *text_, file_, locate(key));
  }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    try {
      out = (*node_)[key].template get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) const {
    if (!node_->contains(key)) return;
    if ((*node_)[key].is_null()) {
      out.reset();
      return;
    }
    T value{};
    get(key, value);
    out = value;
  }

  /// Numbers written as strings ("1e6") are also accepted for big integers.
  void get_string_or_number(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    const auto& v = (*node_)[key];
    if (v.is_string()) {
      out = v.get<std::string>();
    } else if (v.is_number_integer()) {
      out = std::to_string(v.get<long long>());
    } else if (v.is_number()) {
      std::ostringstream s;
      s << std::setprecision(17) << v.get<double>();
      out = s.str();
    } else {
      fail(key, "must be a number or a string");
    }
  }

  void only(std::initializer_list<const char*> allowed) const {
    for (const auto& item : node_->items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || item.key() == a;
      if (!ok) fail(item.key(), "is not a known key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const int line = line_of(*text_, key.empty() ? pos_ : locate(key));
    throw ConfigError(file_ + ":" + std::to_string(line) + ": " + (key.empty() ? path_ : qualified(key)) + " " +
                      what);
  }

  [[nodiscard]] std::size_t locate(const std::string& key) const {
    const auto at = text_->find("\"" + key + "\"", pos_);
    return at == std::string::npos ? pos_ : at;
  }

 private:
  [[nodiscard]] std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* node_;
  std::string path_;
  const std::string* text_;
  std::string file_;
  std::size_t pos_;
};

inline void read_solver(const Reader& r, SolverBlock& s) {
  r.only({"P", "N", "newton_tol", "max_newton", "krylov_tol", "krylov_max", "fd_epsilon", "picard_warmup",
          "line_search_halvings", "stall_limit"});
  r.get("P", s.P);
  r.get("N", s.N);
  auto& n = s.numerics;
  r.get("newton_tol", n.newton_tol);
  r.get("max_newton", n.max_newton);
  r.get("krylov_tol", n.krylov_tol);
  r.get("krylov_max", n.krylov_max);
  r.get("fd_epsilon", n.fd_epsilon);
  r.get("picard_warmup", n.picard_warmup);
  r.get("line_search_halvings", n.line_search_halvings);
  r.get("stall_limit", n.stall_limit);
  if (s.P < 0 || s.N < 1) r.fail("N", "needs N >= 1 and P >= 0");
  if (!(n.newton_tol > 0) || n.max_newton < 1 || !(n.krylov_tol > 0) || n.krylov_max < 1 || !(n.fd_epsilon > 0)) {
    r.fail("", "tolerances and iteration caps must be positive");
  }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text, const std::string& file = "<config>") {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = detail::line_of(text, e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size()));
    throw ConfigError(file + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  RunConfig c;
  detail::Reader top(root, "", text, file);
  top.only({"model", "nonlinearity", "solver", "flow", "diophantine", "counterexample", "floer", "convergence_study",
            "checks", "seed", "output_dir"});
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);

  {
    auto r = top.child("model");
    r.only({"period_X", "ratio", "period_T", "d", "h", "r", "kind"});
    r.get("period_X", c.model.period_X);
    r.get_string_or_number("ratio", c.model.ratio);
    r.get("period_T", c.model.period_T);
    r.get("d", c.model.d);
    r.get("h", c.model.h);
    r.get("r", c.model.r);
    r.get("kind", c.model.kind);
    if (c.model.kind != "nls" && c.model.kind != "nlw") r.fail("kind", "must be \"nls\" or \"nlw\"");
  }
  {
    auto r = top.child("nonlinearity");
    r.only({"kernel", "profile", "potential", "amplitude", "cutoff_radius", "grid_factor"});
    auto& nb = c.nonlinearity;
    r.get("amplitude", nb.amplitude);
    r.get("cutoff_radius", nb.cutoff_radius);
    r.get("grid_factor", nb.grid_factor);
    auto k = r.child("kernel");
    k.only({"family", "beta", "width", "path"});
    k.get("family", nb.kernel.family);
    k.get("beta", nb.kernel.beta);
    k.get("width", nb.kernel.width);
    k.get("path", nb.kernel.path);
    auto p = r.child("profile");
    p.only({"family", "coeffs", "width", "m0", "mt", "mx"});
    p.get("family", nb.profile.family);
    p.get("coeffs", nb.profile.coeffs);
    p.get("width", nb.profile.width);
    p.get("m0", nb.profile.m0);
    p.get("mt", nb.profile.mt);
    p.get("mx", nb.profile.mx);
    auto v = r.child("potential");
    v.only({"shape", "c0", "P", "N", "coeffs"});
    v.get("shape", nb.potential.shape);
    v.get("c0", nb.potential.c0);
    v.get("P", nb.potential.P);
    v.get("N", nb.potential.N);
    v.get("coeffs", nb.potential.coeffs);
    if (nb.potential.shape != "none" && nb.potential.shape != "exponential" && nb.potential.shape != "table") {
      v.fail("shape", "must be none, exponential or table");
    }
    if (nb.kernel.family != "algebraic" && nb.kernel.family != "bump" && nb.kernel.family != "table") {
      k.fail("family", "must be algebraic, bump or table");
    }
    if (nb.cutoff_radius && !(*nb.cutoff_radius > 0)) r.fail("cutoff_radius", "must be > 0");
  }
  detail::read_solver(top.child("solver"), c.solver);
  {
    auto r = top.child("flow");
    r.only({"steps_per_period", "scheme", "project_zero_mode", "periods", "initial_amplitude"});
    r.get("steps_per_period", c.flow.numerics.steps_per_period);
    std::string scheme = c.flow.numerics.scheme == Scheme::lie ? "lie" : "strang";
    r.get("scheme", scheme);
    try {
      c.flow.numerics.scheme = scheme_from_string(scheme);
    } catch (const ConfigError& e) {
      r.fail("scheme", "is invalid: " + std::string(e.what()));
    }
    r.get("project_zero_mode", c.flow.numerics.project_zero_mode);
    r.get("periods", c.flow.periods);
    r.get("initial_amplitude", c.flow.initial_amplitude);
    if (c.flow.numerics.steps_per_period < 1) r.fail("steps_per_period", "must be >= 1");
  }
  {
    auto r = top.child("diophantine");
    r.only({"scan_depth", "N_scan", "P_scan", "kappa"});
    r.get_string_or_number("scan_depth", c.diophantine.scan_depth);
    r.get("N_scan", c.diophantine.N_scan);
    r.get("P_scan", c.diophantine.P_scan);
    r.get("kappa", c.diophantine.kappa);
  }
  {
    auto r = top.child("counterexample");
    r.only({"schedule", "depth", "quotients"});
    r.get("schedule", c.counterexample.schedule);
    r.get("depth", c.counterexample.depth);
    r.get("quotients", c.counterexample.quotients);
    const auto& s = c.counterexample.schedule;
    if (s != "liouville" && s != "golden" && s != "powers_of_ten" && s != "custom") {
      r.fail("schedule", "must be liouville, golden, powers_of_ten or custom");
    }
  }
  {
    auto r = top.child("floer");
    r.only({"tau", "s_min", "s_max", "ds", "max_picard", "tol", "plateau", "ladder", "ball_samples"});
    auto& f = c.floer;
    r.get("tau", f.tau);
    r.get("s_min", f.s_min);
    r.get("s_max", f.s_max);
    r.get("ds", f.ds);
    r.get("max_picard", f.max_picard);
    r.get("tol", f.tol);
    r.get("plateau", f.plateau);
    r.get("ladder", f.ladder);
    r.get("ball_samples", f.ball_samples);
    if (!(f.ds > 0)) r.fail("ds", "must be > 0");
  }
  {
    auto r = top.child("convergence_study");
    r.only({"ladder"});
    r.get("ladder", c.convergence_study.ladder);
  }
  {
    auto r = top.child("checks");
    r.only({"round_trip_tol", "round_trip_steps", "left_tol", "right_tol"});
    r.get("round_trip_tol", c.checks.round_trip_tol);
    r.get("round_trip_steps", c.checks.round_trip_steps);
    r.get("left_tol", c.checks.left_tol);
    r.get("right_tol", c.checks.right_tol);
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ":0: cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig c = parse_config(buf.str(), path.string());
  c.base_dir = path.parent_path();
  return c;
}

// --- building library objects -------------------------------------------------

inline ModelParams build_model(const RunConfig& c) {
  const auto kind = equation_kind_from_string(c.model.kind);
  if (c.model.period_T) {
    return ModelParams::from_periods(c.model.period_X, *c.model.period_T, c.model.d, c.model.h, c.model.r, kind);
  }
  return ModelParams::from_ratio(c.model.period_X, parse_enclosure(c.model.ratio), c.model.d, c.model.h, c.model.r,
                                 kind);
}

inline SpaceTimeField build_potential(const PotentialBlock& b) {
  if (b.shape == "none") return SpaceTimeField(0, 0, Gauge::physical);
  if (b.shape == "exponential") {
    SpaceTimeField c(b.P, b.N, Gauge::physical);
    for (int p = -b.P; p <= b.P; ++p) {
      for (int n = -b.N; n <= b.N; ++n) {
        if (n != 0) c(p, n) = b.c0 * std::exp(-(std::abs(p) + std::abs(n)));
      }
    }
    return c;
  }
  int P = 0, N = 0;
  for (const auto& row : b.coeffs) {
    P = std::max(P, static_cast<int>(std::abs(row[0])));
    N = std::max(N, static_cast<int>(std::abs(row[1])));
  }
  SpaceTimeField c(P, N, Gauge::physical);
  for (const auto& row : b.coeffs) c(static_cast<int>(row[0]), static_cast<int>(row[1])) += Complex(row[2], row[3]);
  return c;
}

inline NonlinearitySpec build_spec(const RunConfig& c, const ModelParams& params) {
  const auto& nb = c.nonlinearity;
  NonlinearitySpec spec;
  if (nb.kernel.family == "algebraic") {
    spec.kernel = Kernel::algebraic(nb.kernel.beta);
  } else if (nb.kernel.family == "bump") {
    spec.kernel = Kernel::bump(nb.kernel.width, params.X());
  } else {
    spec.kernel = Kernel::from_csv((c.base_dir / nb.kernel.path).string());
  }
  spec.profile.family = profile_family_from_string(nb.profile.family);
  spec.profile.coeffs = nb.profile.coeffs;
  spec.profile.width = nb.profile.width;
  spec.profile.m0 = nb.profile.m0;
  spec.profile.mt = nb.profile.mt;
  spec.profile.mx = nb.profile.mx;
  spec.potential = build_potential(nb.potential);
  spec.amplitude = nb.amplitude;
  spec.grid_factor = nb.grid_factor;
  if (nb.cutoff_radius) spec = cutoff_wrap(spec, *nb.cutoff_radius);
  return spec;
}

inline std::vector<BigInt> build_schedule(const CounterexampleBlock& b) {
  if (b.schedule == "liouville") return liouville_schedule(b.depth);
  if (b.schedule == "golden") return golden_schedule(b.depth);
  if (b.schedule == "powers_of_ten") return powers_of_ten_schedule(b.depth);
  std::vector<BigInt> q;
  for (long long a : b.quotients) q.emplace_back(a);
  return q;
}

}  // namespace hampde
