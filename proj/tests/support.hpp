#pragma once

#include <string>

#include "cvsc/cli/config.hpp"
#include "cvsc/dynamics.hpp"

namespace cvsc::fixtures {

std::string data_path(const std::string& name);

cli::SystemConfig benchmark_config();
dynamics::Scenario load_scenario(const std::string& name);

// Two identical governed WPGs on transformers into one load bus.
std::string two_wpg_config_text();

// Equilibrium of a config: power flow, then trim.
dynamics::Equilibrium trimmed(const cli::SystemConfig& cfg);

// Swing-emulation fixture on an infinite bus: the dc-link and angle laws
// with C = J, V_dc_nom = omega_0, K_a = omega_0, against the rotor swing
// equation integrated independently.
struct SwingComparison {
  double max_error = 0.0;    // max |v/V_nom - omega/omega_0|
  double tolerance = 0.0;    // Richardson estimate of the trapezoidal global error
};
SwingComparison swing_equivalence(double dt, double t_end = 2.0);

// Global error of the trapezoidal rule on x' = -x over [0, 1] at step dt.
double decay_error(double dt);

}  // namespace cvsc::fixtures
