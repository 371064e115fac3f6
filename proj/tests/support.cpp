#include "support.hpp"

#include <cmath>

#include <boost/numeric/odeint.hpp>

namespace cvsc::fixtures {

std::string data_path(const std::string& name) { return std::string(CVSC_DATA_DIR) + "/" + name; }

cli::SystemConfig benchmark_config() {
  return cli::parse_system_config(cli::read_file(data_path("benchmark.system")));
}

dynamics::Scenario load_scenario(const std::string& name) {
  return cli::parse_scenario(cli::read_file(data_path(name)));
}

std::string two_wpg_config_text() {
  return R"([bases]
s_system = 100e6
f_n = 60

[buses]
1 generator 575
2 generator 575
3 load 230e3

[branches]
T1 1 3 0 0.02 0 1
T2 2 3 0 0.02 0 1

[loads]
3 1000e6 100e6 power

[wpg.1]
bus = 1
p_dispatch = 500e6
v_setpoint = 1.0
pf_slack = true

[wpg.2]
bus = 2
p_dispatch = 500e6
v_setpoint = 1.0
)";
}

dynamics::Equilibrium trimmed(const cli::SystemConfig& cfg) {
  const auto sys = cfg.to_system();
  return dynamics::trim_equilibrium(sys, sys.solve_powerflow());
}

namespace {

constexpr double kOmega0 = 1110.0;  // numerically equal to V_dc_nom
constexpr double kInertia = 36.0;   // C = J
constexpr double kPmax = 1e8;       // W
constexpr double kP0 = 0.5e8;       // W, pre-disturbance transfer
constexpr double kPm = 0.6e8;       // W, after the mechanical step

double electrical_power(double angle) { return kPmax * std::sin(angle); }

// Trapezoidal run of the capacitor form; returns v/V_nom on the dt grid.
std::vector<double> capacitor_run(double dt, double t_end) {
  controller::CvscGains gains;
  gains.k_a = kOmega0;
  gains.v_dc_nom = kOmega0;
  const double theta0 = std::asin(kP0 / kPmax);
  dynamics::Rhs f = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd d(2);
    d(0) = wpg::dc_link_derivative(x(0), {kPm, 0.0, electrical_power(x(1))}, kInertia);
    d(1) = controller::phase_angle_derivative(x(0), gains);
    return d;
  };
  dynamics::IntegratorOptions opt;
  opt.newton_tolerance = 1e-12;
  opt.scale = Eigen::Vector2d(kOmega0, 1.0);
  dynamics::TrapezoidalIntegrator integ(f, opt);
  Eigen::VectorXd x(2);
  x << kOmega0, theta0;
  const int n = static_cast<int>(std::lround(t_end / dt));
  std::vector<double> out{1.0};
  for (int k = 0; k < n; ++k) {
    x = integ.step(x, dt);
    out.push_back(x(0) / kOmega0);
  }
  return out;
}

}  // namespace

SwingComparison swing_equivalence(double dt, double t_end) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 2>;  // omega, delta
  auto swing = [](const State& s, State& d, double) {
    d[0] = (kPm - electrical_power(s[1])) / (kInertia * s[0]);
    d[1] = s[0] - kOmega0;
  };
  const auto coarse = capacitor_run(dt, t_end);
  const auto fine = capacitor_run(0.5 * dt, t_end);

  State s{kOmega0, std::asin(kP0 / kPmax)};
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
  SwingComparison out;
  double t = 0.0;
  for (std::size_t k = 1; k < coarse.size(); ++k) {
    const double t_next = static_cast<double>(k) * dt;
    ode::integrate_adaptive(stepper, swing, s, t, t_next, dt / 8.0);
    t = t_next;
    const double reference = s[0] / kOmega0;
    out.max_error = std::max(out.max_error, std::abs(coarse[k] - reference));
    out.tolerance = std::max(out.tolerance, 4.0 / 3.0 * std::abs(coarse[k] - fine[2 * k]));
  }
  return out;
}

double decay_error(double dt) {
  dynamics::Rhs f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  dynamics::IntegratorOptions opt;
  opt.newton_tolerance = 1e-14;
  dynamics::TrapezoidalIntegrator integ(f, opt);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  const int n = static_cast<int>(std::lround(1.0 / dt));
  for (int k = 0; k < n; ++k) x = integ.step(x, dt);
  return std::abs(x(0) - std::exp(-1.0));
}

}  // namespace cvsc::fixtures
