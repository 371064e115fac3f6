#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cvsc/cli/config.hpp"

namespace cvsc::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverError = 3, kIntegrationError = 4 };

struct RunConfig {
  std::string system_path;
  std::string scenario_path;
  std::string out_dir = ".";
  std::vector<std::pair<std::string, std::string>> overrides;
  bool waveforms = false;
  std::optional<double> dt;
  std::vector<double> ka_values;
  int ka_points = 81;
  unsigned threads = 1;
};

SystemConfig load_system(const RunConfig& run);

// Worker count for sweeps: hardware threads, capped by CVSC_GRID_THREADS.
unsigned sweep_threads();

int cmd_powerflow(const RunConfig& run, std::ostream& out, std::ostream& err);
int cmd_linearize(const RunConfig& run, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& run, std::ostream& out, std::ostream& err);
int cmd_ka_sweep(const RunConfig& run, std::ostream& out, std::ostream& err);
int cmd_validate(const RunConfig& run, std::ostream& out, std::ostream& err);

}  // namespace cvsc::cli
