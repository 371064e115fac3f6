#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvsc/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace cvsc::cli;
  CLI::App app{"Phasor-domain simulator and small-signal toolkit for CVSC-controlled WPG systems"};
  app.require_subcommand(1);

  RunConfig run;
  std::vector<std::string> sets;
  double dt = 0.0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--system", run.system_path, "System config file")->required();
    sub->add_option("--out", run.out_dir, "Output directory");
    sub->add_option("--set", sets, "Override key=value (repeatable), e.g. wpg.2.k_a=5");
  };

  auto* pf = app.add_subcommand("powerflow", "Solve the initial power flow");
  common(pf);
  auto* lin = app.add_subcommand("linearize", "Trim, linearize and report modes");
  common(lin);
  auto* sim = app.add_subcommand("simulate", "Run a disturbance scenario");
  common(sim);
  sim->add_option("--scenario", run.scenario_path, "Scenario file")->required();
  auto* dt_opt = sim->add_option("--dt", dt, "Step size override, s")->check(CLI::PositiveNumber);
  sim->add_flag("--waveforms", run.waveforms, "Emit reconstructed three-phase bus voltages");
  auto* ka = app.add_subcommand("ka-sweep", "Frequency response of the V_dc to P_e channel versus K_a");
  common(ka);
  ka->add_option("--ka", run.ka_values, "K_a values")->delimiter(',')->required();
  ka->add_option("--points", run.ka_points, "Frequency points on 0.1-1000 rad/s")->check(CLI::Range(2, 100000));
  auto* val = app.add_subcommand("validate", "Check config and scenario files");
  common(val);
  val->add_option("--scenario", run.scenario_path, "Scenario file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << s << "'\n";
      return kConfigError;
    }
    run.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (dt_opt->count()) run.dt = dt;
  run.threads = sweep_threads();

  if (pf->parsed()) return cmd_powerflow(run, std::cout, std::cerr);
  if (lin->parsed()) return cmd_linearize(run, std::cout, std::cerr);
  if (sim->parsed()) return cmd_simulate(run, std::cout, std::cerr);
  if (ka->parsed()) return cmd_ka_sweep(run, std::cout, std::cerr);
  return cmd_validate(run, std::cout, std::cerr);
}
