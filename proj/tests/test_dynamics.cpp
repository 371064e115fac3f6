#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "cvsc/cli/config.hpp"
#include "cvsc/dynamics.hpp"
#include "support.hpp"

using namespace cvsc;
using namespace cvsc::dynamics;

namespace {

const Equilibrium& benchmark_equilibrium() {
  static const Equilibrium eq = fixtures::trimmed(fixtures::benchmark_config());
  return eq;
}

double max_abs_deviation(const std::vector<double>& v) {
  double out = 0.0;
  for (double a : v) out = std::max(out, std::abs(a - v.front()));
  return out;
}

}  // namespace

TEST(Trim, BenchmarkResidualAndNominalVoltage) {
  const auto& eq = benchmark_equilibrium();
  const auto& sys = eq.model.system();
  EXPECT_LT(eq.residual, 1e-10);
  EXPECT_LT(scaled_norm(eq.model.derivative(eq.x), sys.state_scale()), 1e-10);
  for (int i = 0; i < sys.unit_count(); ++i) EXPECT_NEAR(eq.x(i * kUnitStates + 8), 1110.0, 1e-9);
}

TEST(Trim, MatchesPowerFlowDispatch) {
  const auto& eq = benchmark_equilibrium();
  const auto& sys = eq.model.system();
  const auto pf = sys.solve_powerflow();
  const auto ev = eq.model.evaluate(eq.x);
  for (int i = 0; i < sys.unit_count(); ++i) {
    const auto& g = pf.generator(sys.units()[i].bus);
    const auto& so = ev.net.sources[i];
    const auto s_t = so.v_t * std::conj(so.i) * sys.network().s_system;
    EXPECT_NEAR(s_t.real(), g.p, 1e-4 * 1e8);
    EXPECT_NEAR(s_t.imag(), g.q, 1e-4 * 1e8);
  }
}

TEST(Trim, RefineRecoversPerturbedEquilibrium) {
  const auto& eq = benchmark_equilibrium();
  const auto& sys = eq.model.system();
  Eigen::VectorXd x = eq.x;
  for (int i = 0; i < sys.unit_count(); ++i) {
    x(i * kUnitStates + 8) += 0.5;
    x(i * kUnitStates + 5) += 1e-5;
    x(i * kUnitStates + 10) -= 1e-3;
  }
  const auto again = refine_equilibrium(eq.model, x);
  EXPECT_LT(again.residual, 1e-10);
  const Eigen::VectorXd scale = sys.state_scale();
  const double shift = again.x(9) - eq.x(9);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double offset = (k % kUnitStates == 9) ? shift : 0.0;
    EXPECT_NEAR((again.x(k) - offset - eq.x(k)) / scale(k), 0.0, 1e-6) << sys.layout().labels[k];
  }
}

TEST(Integrator, DecayAccuracy) { EXPECT_LT(fixtures::decay_error(1e-3), 1e-6); }

TEST(Integrator, SecondOrderConvergence) {
  const double e1 = fixtures::decay_error(1e-2);
  const double e2 = fixtures::decay_error(5e-3);
  const double e3 = fixtures::decay_error(2.5e-3);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.05);
  EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.05);
}

TEST(Integrator, ZeroDerivativeStateIsUnchanged) {
  Rhs f = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd d(3);
    d << -x(0), 0.0, std::sin(x(0));
    return d;
  };
  TrapezoidalIntegrator integ(f);
  Eigen::VectorXd x(3);
  x << 1.0, 0.123456789, 0.0;
  for (int k = 0; k < 500; ++k) x = integ.step(x, 1e-2);
  EXPECT_EQ(x(1), 0.123456789);
}

TEST(Integrator, ObserverCoversTheStep) {
  Rhs f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  TrapezoidalIntegrator integ(f);
  double covered = 0.0;
  integ.set_observer([&](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&,
                         const Eigen::VectorXd&, double h) { covered += h; });
  Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
  for (int k = 0; k < 10; ++k) x = integ.step(x, 0.1);
  EXPECT_NEAR(covered, 1.0, 1e-12);
}

TEST(Integrator, FailureRaisesIntegrationError) {
  Rhs f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x.array().square() + 1.0); };
  IntegratorOptions opt;
  opt.max_newton = 1;
  opt.newton_tolerance = 1e-300;
  opt.dt_min = 1e-3;
  TrapezoidalIntegrator integ(f, opt);
  EXPECT_THROW(integ.step(Eigen::VectorXd::Ones(1), 0.1), IntegrationError);
}

TEST(Scenario, EmptyScenarioStaysAtEquilibrium) {
  const auto& eq = benchmark_equilibrium();
  Scenario sc;
  sc.t_end = 10.0;
  sc.dt = 1e-2;
  const auto ts = run_scenario(eq.model, sc, eq.x);
  for (const auto& u : eq.model.system().units()) {
    EXPECT_LT(max_abs_deviation(ts.channel("v_dc." + u.name)) / 1110.0, 1e-8) << u.name;
    EXPECT_LT(max_abs_deviation(ts.channel("p_e." + u.name)) / u.params.P_n, 1e-8) << u.name;
    EXPECT_LT(max_abs_deviation(ts.channel("omega_r." + u.name)), 1e-8) << u.name;
  }
}

TEST(Scenario, EventTimesAreOnTheGrid) {
  const auto& eq = benchmark_equilibrium();
  auto sc = fixtures::load_scenario("fault_line_7_8.scenario");
  sc.t_end = 2.5;
  const auto ts = run_scenario(eq.model, sc, eq.x);
  for (double t : {2.0, 2.0667, 2.1667}) {
    bool found = false;
    for (double s : ts.time) found = found || std::abs(s - t) < 1e-12;
    EXPECT_TRUE(found) << t;
  }
  for (std::size_t k = 1; k < ts.samples(); ++k) EXPECT_GE(ts.time[k], ts.time[k - 1]);
  EXPECT_DOUBLE_EQ(ts.time.back(), 2.5);
}

TEST(Scenario, Deterministic) {
  const auto& eq = benchmark_equilibrium();
  auto sc = fixtures::load_scenario("loadstep.scenario");
  sc.t_end = 3.0;
  const auto a = run_scenario(eq.model, sc, eq.x);
  const auto b = run_scenario(eq.model, sc, eq.x);
  ASSERT_EQ(a.names, b.names);
  ASSERT_EQ(a.time, b.time);
  for (std::size_t c = 0; c < a.data.size(); ++c) {
    for (std::size_t k = 0; k < a.data[c].size(); ++k) {
      const double u = a.data[c][k], v = b.data[c][k];
      EXPECT_TRUE((std::isnan(u) && std::isnan(v)) || u == v) << a.names[c];
    }
  }
}

TEST(Scenario, OutputSelection) {
  const auto& eq = benchmark_equilibrium();
  Scenario sc;
  sc.t_end = 0.1;
  sc.dt = 1e-2;
  sc.outputs = {"v_dc.1", "p_load"};
  const auto ts = run_scenario(eq.model, sc, eq.x);
  EXPECT_EQ(ts.names, (std::vector<std::string>{"v_dc.1", "p_load"}));
}

TEST(Scenario, PartialSeriesOnFailure) {
  const auto& eq = benchmark_equilibrium();
  auto sc = fixtures::load_scenario("loadstep.scenario");
  sc.t_end = 3.0;
  RunOptions opt;
  opt.integrator.max_newton = 1;
  opt.integrator.newton_tolerance = 1e-300;
  opt.integrator.dt_min = 1e-4;
  try {
    run_scenario(eq.model, sc, eq.x, opt);
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_GE(e.partial().samples(), 1u);
    EXPECT_EQ(e.partial().time.front(), 0.0);
    EXPECT_LE(e.partial().time.back(), e.time());
  }
}

TEST(Scenario, FaultStaysBounded) {
  const auto& eq = benchmark_equilibrium();
  auto sc = fixtures::load_scenario("fault_line_7_8.scenario");
  sc.t_end = 5.0;
  const auto ts = run_scenario(eq.model, sc, eq.x);
  for (const auto& u : eq.model.system().units()) {
    for (double v : ts.channel("v_dc." + u.name)) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GT(v, 0.9 * 1110.0);
      EXPECT_LT(v, 1.2 * 1110.0);
    }
  }
}

TEST(Scenario, LoadStepEnergyBalance) {
  const auto& eq = benchmark_equilibrium();
  auto sc = fixtures::load_scenario("loadstep.scenario");
  sc.t_end = 6.0;
  const auto ts = run_scenario(eq.model, sc, eq.x);
  const auto summary = summarize(eq.model.system(), sc, ts);
  for (const auto& u : summary.units) {
    EXPECT_GT(u.energy_peak, 0.0) << u.name;
    EXPECT_LT(u.energy_ratio, 0.005) << u.name;
  }
}

// Two identical governed units share a load step equally, and the common
// voltage offset follows the aggregate droop.
TEST(Scenario, TwoUnitDroopSharing) {
  const auto cfg = cli::parse_system_config(fixtures::two_wpg_config_text());
  const auto eq = fixtures::trimmed(cfg);
  Scenario sc;
  sc.t_end = 30.0;
  sc.dt = 2e-3;
  network::Event ev;
  ev.time = 1.0;
  ev.kind = network::EventKind::load_step;
  ev.bus = 3;
  ev.p = 100e6;
  sc.events.push_back(ev);
  const auto ts = run_scenario(eq.model, sc, eq.x);
  const auto& units = eq.model.system().units();
  double dp[2], sum_gain = 0.0, dp_total = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto& pe = ts.channel("p_e." + units[i].name);
    dp[i] = pe.back() - pe.front();
    dp_total += dp[i];
    sum_gain += units[i].gains.k_pg1 * units[i].params.P_n;
  }
  ASSERT_GT(dp[0], 1e6);
  EXPECT_NEAR(dp[0], dp[1], 0.01 * std::abs(dp[0]));
  const double expected = -dp_total / sum_gain;
  for (int i = 0; i < 2; ++i) {
    const double dv = (ts.channel("v_dc." + units[i].name).back() - 1110.0) / 1110.0;
    EXPECT_NEAR(dv, expected, 0.05 * std::abs(expected)) << units[i].name;
  }
}

TEST(SwingEquivalence, CapacitorTracksRotorSpeed) {
  const auto r = fixtures::swing_equivalence(1e-3);
  EXPECT_GT(r.tolerance, 0.0);
  EXPECT_LE(r.max_error, 2.0 * r.tolerance);
}

TEST(Summary, ReportsSynchronism) {
  const auto& eq = benchmark_equilibrium();
  Scenario sc;
  sc.t_end = 0.5;
  sc.dt = 1e-2;
  const auto ts = run_scenario(eq.model, sc, eq.x);
  const auto s = summarize(eq.model.system(), sc, ts);
  EXPECT_EQ(s.units.size(), 4u);
  EXPECT_LT(s.sync_residual, 1e-9);
  EXPECT_LT(std::abs(s.delta_p_load), 1.0);
}
