#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cvsc/cli/commands.hpp"
#include "cvsc/cli/config.hpp"
#include "cvsc/cli/csv.hpp"
#include "support.hpp"

using namespace cvsc;
using namespace cvsc::cli;
namespace fs = std::filesystem;

namespace {

const char* kTwoBus = R"([bases]
s_system = 100e6
f_n = 60

[buses]
1 generator 575
2 load 230e3

[branches]
T1 1 2 0 0.05 0 1

[loads]
2 300e6 50e6 power

[wpg.1]
bus = 1
p_dispatch = 300e6
v_setpoint = 1.0
pf_slack = true
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cvsc_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_exe(const std::string& args) {
  const std::string cmd = std::string(CVSC_GRID_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig benchmark_run(const fs::path& out) {
  RunConfig run;
  run.system_path = fixtures::data_path("benchmark.system");
  run.out_dir = out.string();
  return run;
}

}  // namespace

TEST(SystemConfig, RoundTrip) {
  const auto a = parse_system_config(kTwoBus);
  const auto text = serialize_system_config(a);
  const auto b = parse_system_config(text);
  EXPECT_EQ(serialize_system_config(b), text);
  ASSERT_EQ(b.network.buses.size(), 2u);
  EXPECT_EQ(b.network.branches[0].name, "T1");
  EXPECT_EQ(b.network.branches[0].x, 0.05);
  ASSERT_EQ(b.units.size(), 1u);
  EXPECT_EQ(b.units[0].p_dispatch, 300e6);
  EXPECT_TRUE(b.units[0].pf_slack);
}

TEST(SystemConfig, BenchmarkRoundTrip) {
  const auto a = fixtures::benchmark_config();
  const auto b = parse_system_config(serialize_system_config(a));
  EXPECT_EQ(serialize_system_config(a), serialize_system_config(b));
  EXPECT_EQ(b.units.size(), 4u);
  EXPECT_FALSE(b.units[2].gains.has_governor);
  EXPECT_TRUE(b.units[3].pf_slack);
}

TEST(SystemConfig, MissingFieldsTakeDefaults) {
  const auto cfg = parse_system_config(kTwoBus);
  EXPECT_EQ(cfg.units[0].params.C, 36.0);
  EXPECT_EQ(cfg.units[0].params.V_dc_nom, 1110.0);
  EXPECT_EQ(cfg.units[0].gains.k_a, 10.0);
}

TEST(SystemConfig, ZeroReactanceNamesTheBranch) {
  std::string text = kTwoBus;
  text.replace(text.find("T1 1 2 0 0.05"), 13, "T1 1 2 0 0   ");
  try {
    parse_system_config(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    ASSERT_FALSE(e.problems().empty());
    EXPECT_NE(e.problems()[0].find("T1"), std::string::npos);
    EXPECT_NE(e.problems()[0].find("line 10"), std::string::npos) << e.problems()[0];
  }
}

TEST(SystemConfig, ReportsEveryProblemWithLineNumbers) {
  const char* bad = R"([bases]
s_system = abc
[buses]
1 generator
[mystery]
)";
  try {
    parse_system_config(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GE(e.problems().size(), 3u);
    EXPECT_EQ(e.problems()[0].rfind("line 2", 0), 0u);
  }
}

TEST(SystemConfig, Overrides) {
  auto cfg = parse_system_config(kTwoBus);
  apply_override(cfg, "wpg.1.k_a", "20");
  EXPECT_EQ(cfg.units[0].gains.k_a, 20.0);
  apply_override(cfg, "cvsc.1.k_e", "0.5");
  EXPECT_EQ(cfg.units[0].gains.k_e, 0.5);
  apply_override(cfg, "bases.f_n", "50");
  EXPECT_EQ(cfg.network.f_n, 50.0);
  EXPECT_THROW(apply_override(cfg, "wpg.9.k_a", "1"), ParseError);
  EXPECT_THROW(apply_override(cfg, "wpg.1.nonsense", "1"), ParseError);
  EXPECT_THROW(apply_override(cfg, "wpg.1.c", "-1"), ParseError);
  const auto kv = split_assignment("wpg.1.c = 40");
  EXPECT_EQ(kv.first, "wpg.1.c");
  EXPECT_EQ(kv.second, "40");
}

TEST(Scenario, ParseAndRoundTrip) {
  const auto sc = fixtures::load_scenario("fault_line_7_8.scenario");
  EXPECT_EQ(sc.t_end, 10.0);
  EXPECT_EQ(sc.dt, 0.001);
  ASSERT_EQ(sc.events.size(), 3u);
  EXPECT_EQ(sc.events[0].kind, network::EventKind::fault);
  EXPECT_EQ(sc.events[0].branch, "L7-8a");
  EXPECT_EQ(sc.events[0].location, 0.5);
  EXPECT_EQ(sc.events[1].time, 2.0667);
  EXPECT_EQ(sc.events[2].kind, network::EventKind::reclose);
  const auto again = parse_scenario(serialize_scenario(sc));
  EXPECT_EQ(serialize_scenario(again), serialize_scenario(sc));

  const auto step = fixtures::load_scenario("loadstep.scenario");
  ASSERT_EQ(step.events.size(), 1u);
  EXPECT_EQ(step.events[0].bus, 9);
  EXPECT_EQ(step.events[0].p, 400e6);
}

TEST(Scenario, RejectsUnsortedEvents) {
  EXPECT_THROW(parse_scenario("[scenario]\nt_end = 5\ndt = 0.01\n[events]\n3 clear branch=a\n1 clear branch=a\n"),
               ParseError);
  EXPECT_THROW(parse_scenario("[scenario]\nt_end = 5\ndt = -1\n"), ParseError);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1110.0), "1110");
  EXPECT_EQ(format_number(-2.5e-7), "-2.4999999999999999e-07");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_optional(std::nullopt), "");
  std::ostringstream out;
  CsvWriter w(out);
  w.row({"a", "b,c", "d\"e"});
  EXPECT_EQ(out.str(), "a,\"b,c\",\"d\"\"e\"\n");
}

TEST(Commands, PowerflowWritesTables) {
  const auto dir = scratch("pf");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_powerflow(benchmark_run(dir), out, err), kOk) << err.str();
  const auto buses = slurp(dir / "powerflow_buses.csv");
  EXPECT_EQ(buses.rfind("bus,v_pu,angle_deg\n", 0), 0u);
  EXPECT_EQ(std::count(buses.begin(), buses.end(), '\n'), 12);
  EXPECT_EQ(slurp(dir / "powerflow_generators.csv").rfind("wpg,bus,p_mw,q_mvar\n", 0), 0u);
}

TEST(Commands, LinearizeIsByteIdentical) {
  const auto a = scratch("lin_a"), b = scratch("lin_b");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_linearize(benchmark_run(a), out, err), kOk) << err.str();
  ASSERT_EQ(cmd_linearize(benchmark_run(b), out, err), kOk) << err.str();
  const auto ta = slurp(a / "modes.csv");
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, slurp(b / "modes.csv"));
  EXPECT_EQ(ta.rfind("index,re,im,freq_hz,damping_ratio,dominant_state,participation_top3,class\n", 0), 0u);
}

TEST(Commands, SimulateWritesSeriesAndSummary) {
  const auto dir = scratch("sim");
  const fs::path scen = dir / "short.scenario";
  std::ofstream(scen) << "[scenario]\nt_end = 0.5\ndt = 0.01\n[events]\n0.2 load-step bus=9 p=100e6 q=0\n";
  auto run = benchmark_run(dir);
  run.scenario_path = scen.string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate(run, out, err), kOk) << err.str();
  EXPECT_TRUE(fs::exists(dir / "wpg_1.csv"));
  EXPECT_TRUE(fs::exists(dir / "wpg_4.csv"));
  const auto net = slurp(dir / "network.csv");
  EXPECT_NE(net.find("v_fault"), std::string::npos);
  EXPECT_NE(net.find("p_load"), std::string::npos);
  const auto summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("status = complete"), std::string::npos);
  EXPECT_NE(summary.find("wpg.1.v_dc_peak"), std::string::npos);
}

TEST(Commands, KaSweepColumns) {
  const auto dir = scratch("ka");
  auto run = benchmark_run(dir);
  run.ka_values = {1, 10};
  run.ka_points = 5;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_ka_sweep(run, out, err), kOk) << err.str();
  const auto csv = slurp(dir / "ka_sweep.csv");
  EXPECT_EQ(csv.rfind("omega_rad_s,k_a=1,k_a=10\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

TEST(Commands, ConfigErrorsMapToExitCodeTwo) {
  const auto dir = scratch("cfg");
  RunConfig run;
  run.system_path = (dir / "missing.system").string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_validate(run, out, err), kConfigError);
  EXPECT_FALSE(err.str().empty());
}

TEST(Commands, PowerFlowDivergenceMapsToExitCodeThree) {
  const auto dir = scratch("div");
  auto run = benchmark_run(dir);
  run.overrides = {{"wpg.1.p_dispatch", "9000e6"}, {"wpg.2.p_dispatch", "9000e6"}};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_powerflow(run, out, err), kSolverError) << err.str();
}

TEST(Executable, ExitCodes) {
  const auto dir = scratch("exe");
  const std::string sys = fixtures::data_path("benchmark.system");
  EXPECT_EQ(run_exe("validate --system " + sys + " --scenario " + fixtures::data_path("loadstep.scenario")), 0);
  EXPECT_EQ(run_exe("validate --system " + (dir / "nope.system").string()), 2);
  EXPECT_EQ(run_exe("powerflow --system " + sys + " --out " + dir.string() + " --set wpg.1.c=-3"), 2);
  EXPECT_EQ(run_exe("frobnicate"), 2);
  EXPECT_EQ(run_exe("powerflow --system " + sys + " --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "powerflow_buses.csv"));
}
