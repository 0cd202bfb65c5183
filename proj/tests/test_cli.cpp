#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hampde/cli.hpp"

namespace fs = std::filesystem;
using namespace hampde;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "hampde_cli_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

RunConfig small_nls(int P = 8, int N = 8) {
  auto c = load_config(fs::path(HAMPDE_CONFIG_DIR) / "nls_golden.json");
  c.solver.P = P;
  c.solver.N = N;
  return c;
}

cli::Flags to(const fs::path& dir) {
  cli::Flags f;
  f.output = dir.string();
  return f;
}

}  // namespace

TEST(Config, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(HAMPDE_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    EXPECT_NO_THROW(load_config(entry.path()));
  }
}

TEST(Config, DumpReloadIsIdentity) {
  const auto c = load_config(fs::path(HAMPDE_CONFIG_DIR) / "nls_golden.json");
  const auto first = to_json(c);
  const auto again = parse_config(first.dump(2), "<dump>");
  EXPECT_EQ(to_json(again).dump(), first.dump());
  EXPECT_EQ(c.solver.P, 32);
  EXPECT_EQ(c.model.ratio, "golden");
  ASSERT_TRUE(c.floer.s_max.has_value());
  EXPECT_DOUBLE_EQ(*c.floer.s_max, 40.0);
  EXPECT_FALSE(c.floer.tau.has_value());
}

TEST(Config, UnknownKeyReportsItsLine) {
  const std::string text = "{\n  \"model\": {\"d\": 2},\n  \"solver\": {\n    \"P\": 8,\n    \"newton_tolerance\": 1e-9\n  }\n}\n";
  try {
    parse_config(text, "bad.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.json:5:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("solver.newton_tolerance"), std::string::npos) << msg;
  }
}

TEST(Config, MalformedJsonReportsItsLine) {
  const std::string text = "{\n  \"model\": {\"d\": 2},\n  \"solver\": {\"P\": 8,}\n}\n";
  try {
    parse_config(text, "broken.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Config, WrongTypeAndBadEnumAreRejected) {
  EXPECT_THROW(parse_config("{\"solver\": {\"P\": \"many\"}}", "t.json"), ConfigError);
  EXPECT_THROW(parse_config("{\"model\": {\"kind\": \"kdv\"}}", "t.json"), ConfigError);
  EXPECT_THROW(parse_config("{\"flow\": {\"scheme\": \"euler\"}}", "t.json"), ConfigError);
}

TEST(Cli, MissingConfigFileIsUsageError) {
  std::ostringstream err;
  EXPECT_EQ(cli::run("solve-periodic", fs::path("/nonexistent/none.json"), cli::Flags{}, err), cli::usage_error);
  EXPECT_NE(err.str().find("cannot open"), std::string::npos);
}

TEST(Cli, UnknownCommandIsUsageError) {
  std::ostringstream err;
  EXPECT_EQ(cli::run("solve", RunConfig{}, cli::Flags{}, err), cli::usage_error);
}

TEST(Cli, ZeroSpecGivesTrivialSolution) {
  const auto dir = scratch("zero");
  std::ostringstream err;
  const auto c = load_config(fs::path(HAMPDE_CONFIG_DIR) / "zero.json");
  EXPECT_EQ(cli::run("solve-periodic", c, to(dir), err), cli::pass) << err.str();
  const auto report = read_json(dir / "report.json");
  EXPECT_TRUE(report["trivial"].get<bool>());
  EXPECT_FALSE(report["forced_at_zero"].get<bool>());
  EXPECT_EQ(report["solution"]["norm"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "solution.json"));
}

TEST(Cli, ResonantPeriodsExitTwo) {
  // T = X with d = 1: λ(p,n) = p − n vanishes on the diagonal
  const auto dir = scratch("resonant");
  std::ostringstream err;
  const auto c = load_config(fs::path(HAMPDE_CONFIG_DIR) / "resonant.json");
  EXPECT_EQ(cli::run("diophantine", c, to(dir), err), cli::check_failed) << err.str();
  const auto report = read_json(dir / "report.json");
  EXPECT_EQ(report["admissibility"]["verdict"], "resonant");
  EXPECT_FALSE(report["passed"].get<bool>());
  EXPECT_EQ(report["checks"]["resonance_free"], false);
  EXPECT_EQ(cli::run("solve-periodic", c, to(scratch("resonant_solve")), err), cli::check_failed);
}

TEST(Cli, DiophantineGoldenWritesDivisorTable) {
  const auto dir = scratch("dioph");
  auto c = small_nls();
  c.diophantine.N_scan = 64;
  std::ostringstream err;
  EXPECT_EQ(cli::run("diophantine", c, to(dir), err), cli::pass) << err.str();
  const auto report = read_json(dir / "report.json");
  EXPECT_EQ(report["admissibility"]["verdict"], "admissible-at-depth");
  // P_scan default: ceil(x·N_scan^d) + 2
  EXPECT_EQ(report["divisor_scan"]["P_scan"].get<long long>(), 6630);
  const auto csv = slurp(dir / "divisors.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 65);
}

TEST(Cli, CounterexampleLiouville) {
  const auto dir = scratch("liouville");
  std::ostringstream err;
  const auto c = load_config(fs::path(HAMPDE_CONFIG_DIR) / "liouville.json");
  EXPECT_EQ(cli::run("counterexample", c, to(dir), err), cli::pass) << err.str();
  const auto report = read_json(dir / "report.json");
  EXPECT_TRUE(report["counterexample"]["solution_is_one"].get<bool>());
  const auto csv = slurp(dir / "counterexample.csv");
  EXPECT_EQ(csv.rfind("k,p,q,forcing,exponent,solution\n", 0), 0u);
  EXPECT_NE(csv.find(",1/1\n"), std::string::npos);
}

TEST(Cli, CounterexamplePowersOfTenFailsSmoothness) {
  const auto dir = scratch("tens");
  RunConfig c;
  c.counterexample.schedule = "powers_of_ten";
  c.counterexample.depth = 6;
  std::ostringstream err;
  EXPECT_EQ(cli::run("counterexample", c, to(dir), err), cli::check_failed) << err.str();
  EXPECT_FALSE(read_json(dir / "report.json")["checks"]["smooth"].get<bool>());
}

TEST(Cli, SolvePeriodicSmallReference) {
  const auto dir = scratch("solve");
  std::ostringstream err;
  EXPECT_EQ(cli::run("solve-periodic", small_nls(), to(dir), err), cli::pass) << err.str();
  const auto report = read_json(dir / "report.json");
  EXPECT_LE(report["residual"].get<double>(), 1e-10);
  EXPECT_GT(report["solution"]["norm"].get<double>(), 1e-3);
  EXPECT_LE(report["round_trip_defect"].get<double>(), 1e-6);
  const auto sol = read_json(dir / "solution.json");
  EXPECT_EQ(sol["twisted"]["gauge"], "twisted");
  EXPECT_EQ(sol["physical"]["gauge"], "physical");
}

TEST(Cli, ReportAndCsvAreDeterministic) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  std::ostringstream err;
  ASSERT_EQ(cli::run("solve-periodic", small_nls(), to(a), err), cli::pass);
  ASSERT_EQ(cli::run("solve-periodic", small_nls(), to(b), err), cli::pass);
  for (const char* name : {"report.json", "audit.csv", "solution.json"}) {
    SCOPED_TRACE(name);
    EXPECT_EQ(slurp(a / name), slurp(b / name));
  }
  // timings differ, everything else in the manifest agrees
  auto ma = read_json(a / "manifest.json");
  auto mb = read_json(b / "manifest.json");
  ma.erase("timings");
  mb.erase("timings");
  EXPECT_EQ(ma, mb);
}

TEST(Cli, ConvergenceStudyLadder) {
  auto c = small_nls();
  c.convergence_study.ladder = {{4, 4}, {6, 6}, {8, 8}, {12, 12}};
  const auto serial = scratch("study_1");
  const auto parallel = scratch("study_4");
  std::ostringstream err;
  ASSERT_EQ(cli::run("convergence-study", c, to(serial), err), cli::pass) << err.str();
  auto flags = to(parallel);
  flags.jobs = 4;
  ASSERT_EQ(cli::run("convergence-study", c, flags, err), cli::pass) << err.str();
  EXPECT_EQ(slurp(serial / "convergence.csv"), slurp(parallel / "convergence.csv"));

  const auto report = read_json(serial / "report.json");
  const auto& ladder = report["ladder"];
  ASSERT_EQ(ladder.size(), 4u);
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    EXPECT_LE(ladder[k]["tail"].get<double>(), ladder[k - 1]["tail"].get<double>());
  }
}

TEST(Cli, SeedFlagOverridesConfig) {
  const auto dir = scratch("seed");
  auto flags = to(dir);
  flags.seed = 99;
  flags.trace = true;
  std::ostringstream err;
  auto c = small_nls();
  c.flow.numerics.steps_per_period = 32;
  ASSERT_EQ(cli::run("flow", c, flags, err), cli::pass) << err.str();
  EXPECT_EQ(read_json(dir / "manifest.json")["seed"].get<std::uint64_t>(), 99u);
  const auto trace = slurp(dir / "trace.csv");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 34);  // header + 33 samples
}

TEST(Cli, OutputFlagBeatsEnvironment) {
  const auto env_dir = scratch("env");
  const auto flag_dir = scratch("flag");
  ::setenv("OUTPUT_DIR", env_dir.c_str(), 1);
  std::ostringstream err;
  const auto c = load_config(fs::path(HAMPDE_CONFIG_DIR) / "liouville.json");
  EXPECT_EQ(cli::run("counterexample", c, cli::Flags{}, err), cli::pass);
  EXPECT_TRUE(fs::exists(env_dir / "report.json"));
  EXPECT_EQ(cli::run("counterexample", c, to(flag_dir), err), cli::pass);
  EXPECT_TRUE(fs::exists(flag_dir / "report.json"));
  ::unsetenv("OUTPUT_DIR");
}

TEST(Cli, FloerSmallOneSided) {
  const auto dir = scratch("floer");
  auto c = small_nls(4, 4);
  c.floer.s_min = -50;
  c.floer.s_max = 30;
  c.floer.ds = 0.1;
  c.floer.ladder = {1, 2, 3};
  c.floer.ball_samples = 20;
  std::ostringstream err;
  EXPECT_EQ(cli::run("floer", c, to(dir), err), cli::pass) << err.str();
  const auto report = read_json(dir / "report.json");
  EXPECT_EQ(report["curve"]["sup_bound_violations"].get<long long>(), 0);
  EXPECT_TRUE(report["curve"]["one_sided"].get<bool>());
  EXPECT_EQ(slurp(dir / "curve.csv").rfind("s,p,n,re,im\n", 0), 0u);
}
