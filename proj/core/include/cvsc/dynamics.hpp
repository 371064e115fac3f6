#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cvsc/controller.hpp"
#include "cvsc/error.hpp"
#include "cvsc/model.hpp"
#include "cvsc/network.hpp"
#include "cvsc/wpg.hpp"

namespace cvsc::dynamics {

struct WpgUnit {
  std::string name;
  int bus = 0;
  model::WpgParameters params;
  controller::CvscGains gains;
  double p_dispatch = 0.0;  // W
  double v_setpoint = 1.0;  // pu
  bool pf_slack = false;
};

// Per unit: the 12 WpgState entries, then the extension states.
inline constexpr int kCoreStates = static_cast<int>(model::WpgState::size);
inline constexpr int kExtStates = 4;
inline constexpr int kUnitStates = kCoreStates + kExtStates;
enum ExtState { kDeltaR = 12, kXComp = 13, kXField = 14, kPInRef = 15 };

struct StateLayout {
  std::vector<std::string> labels;  // e.g. "psi_q.3"
  std::vector<bool> core;

  int size() const { return static_cast<int>(labels.size()); }
  int index(std::string_view label) const;
  std::vector<int> core_indices() const;
};

StateLayout make_layout(const std::vector<WpgUnit>& units);

class SimSystem {
 public:
  SimSystem(model::NetworkModel network, std::vector<WpgUnit> units);

  const model::NetworkModel& network() const { return network_; }
  const std::vector<WpgUnit>& units() const { return units_; }
  const std::vector<wpg::SgFundamental>& fundamentals() const { return fundamentals_; }
  const StateLayout& layout() const { return layout_; }
  int unit_count() const { return static_cast<int>(units_.size()); }
  int unit_index(std::string_view name) const;

  int pf_slack_bus() const;
  std::vector<network::GeneratorDispatch> dispatch() const;
  network::PowerFlowSolution solve_powerflow() const;
  std::vector<network::Source> sources() const;
  // Per-state normalization used for residual norms.
  Eigen::VectorXd state_scale() const;

 private:
  model::NetworkModel network_;
  std::vector<WpgUnit> units_;
  std::vector<wpg::SgFundamental> fundamentals_;
  StateLayout layout_;
};

// Operating references fixed at trim.
struct UnitReferences {
  double v_t_ref = 1.0;      // pu
  double psi_f_ref = 0.0;    // pu
  double p_schedule = 0.0;   // W
  double i_s_hold = 0.0;     // A
};

struct UnitOutputs {
  double p_e = 0.0;  // W
  double q_e = 0.0;  // var
  double v_t = 0.0;  // pu
  double p_in = 0.0;  // W
  double p_storage = 0.0;  // W
  double t_e = 0.0;
  double t_mech = 0.0;
  double beta = 0.0;  // deg
  double e_f = 0.0;
  double i_s_ref = 0.0;  // A after clamp
};

struct Evaluation {
  Eigen::VectorXd dx;
  std::vector<UnitOutputs> units;
  network::NetworkSolution net;
};

// Derivative function for one network topology.
class DynamicModel {
 public:
  DynamicModel(SimSystem system, std::vector<UnitReferences> refs, network::AdmittanceMatrix y);

  Evaluation evaluate(const Eigen::VectorXd& x) const;
  Eigen::VectorXd derivative(const Eigen::VectorXd& x) const;
  DynamicModel with_admittance(network::AdmittanceMatrix y) const;
  DynamicModel with_references(std::vector<UnitReferences> refs) const;

  const SimSystem& system() const { return system_; }
  const std::vector<UnitReferences>& references() const { return refs_; }
  const network::AdmittanceMatrix& admittance() const { return solver_.admittance(); }
  const network::NetworkSolver& solver() const { return solver_; }
  // Keeps m inside its limits after a step.
  void project(Eigen::VectorXd& x) const;

 private:
  SimSystem system_;
  std::vector<UnitReferences> refs_;
  network::NetworkSolver solver_;
};

struct TrimOptions {
  double tolerance = 1e-10;
  int max_iterations = 25;
};

struct Equilibrium {
  DynamicModel model;
  Eigen::VectorXd x;
  double residual = 0.0;  // scaled infinity norm of the derivative
  int iterations = 0;
};

// Scaled infinity norm of a derivative vector.
double scaled_norm(const Eigen::VectorXd& dx, const Eigen::VectorXd& scale);

Equilibrium trim_equilibrium(const SimSystem& system, const network::PowerFlowSolution& pf,
                             const TrimOptions& options = {});

// Newton-refine an existing model from a nearby state.
Equilibrium refine_equilibrium(const DynamicModel& model, Eigen::VectorXd x0, const TrimOptions& options = {});

using Rhs = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Finite-difference Jacobian with per-state steps. With `central` false,
// forward differences reuse f(x).
Eigen::MatrixXd numeric_jacobian(const Rhs& f, const Eigen::VectorXd& x, const Eigen::VectorXd& fx,
                                 const Eigen::VectorXd& steps, bool central);

struct IntegratorOptions {
  double newton_tolerance = 1e-9;
  int max_newton = 10;
  double dt_min = 1e-6;
  Eigen::VectorXd scale;  // empty means unit scaling
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Implicit trapezoidal rule with a modified-Newton inner loop.
class TrapezoidalIntegrator {
 public:
  TrapezoidalIntegrator(Rhs f, IntegratorOptions options = {});

  // f(x) may be passed when already known.
  Eigen::VectorXd step(const Eigen::VectorXd& x, double dt, const Eigen::VectorXd* fx = nullptr);
  void reset(Rhs f);

  // Called once per accepted elementary step (after any halving) with the
  // end points and their derivatives.
  using Observer = std::function<void(const Eigen::VectorXd& x0, const Eigen::VectorXd& f0,
                                      const Eigen::VectorXd& x1, const Eigen::VectorXd& f1, double dt)>;
  void set_observer(Observer observer) { observer_ = std::move(observer); }

  int jacobian_updates() const { return jac_updates_; }
  int newton_iterations() const { return newton_iters_; }
  double last_residual() const { return last_residual_; }

 private:
  bool attempt(const Eigen::VectorXd& x, const Eigen::VectorXd& fx, double dt, Eigen::VectorXd& out,
               Eigen::VectorXd& fout);
  void refresh_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& fx);
  void factor(double dt);
  Eigen::VectorXd advance(const Eigen::VectorXd& x, const Eigen::VectorXd& fx, double dt, Eigen::VectorXd& fout);

  Rhs f_;
  IntegratorOptions opt_;
  Observer observer_;
  Eigen::MatrixXd jac_;
  bool have_jac_ = false;
  bool jac_fresh_ = false;
  double factored_dt_ = -1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  int jac_updates_ = 0;
  int newton_iters_ = 0;
  double last_residual_ = 0.0;
};

Eigen::VectorXd integrate_step(const DynamicModel& model, const Eigen::VectorXd& x, double t, double dt);

struct Scenario {
  double t_end = 10.0;
  double dt = 1e-3;
  std::vector<network::Event> events;
  std::vector<std::string> outputs;  // empty means every channel
};

void validate(const Scenario& scenario);

class TimeSeries {
 public:
  std::vector<double> time;
  std::vector<std::string> names;
  std::vector<std::vector<double>> data;

  int channel_index(std::string_view name) const;
  const std::vector<double>& channel(std::string_view name) const;
  bool has_channel(std::string_view name) const;
  std::size_t samples() const { return time.size(); }
};

struct RunOptions {
  bool waveforms = false;
  IntegratorOptions integrator;
};

class ScenarioError : public IntegrationError {
 public:
  ScenarioError(const std::string& what, double time, TimeSeries partial)
      : IntegrationError(what, time), partial_(std::move(partial)) {}
  const TimeSeries& partial() const noexcept { return partial_; }

 private:
  TimeSeries partial_;
};

// Channels per unit "<name>.<i>": v_dc [V], p_e [W], q_e [var], p_in [W],
// p_storage [W], v_t [pu], delta_theta [rad], omega_r, omega_t, m, beta [deg],
// e_exchange [J, running integral of p_in + p_storage - p_e over integrator steps].
// Network: v_bus.<id> [pu], v_fault [pu, NaN without a fault], p_load [W],
// p_loss [W]; with waveforms also
// va/vb/vc_bus.<id> [pu instantaneous].
TimeSeries run_scenario(const DynamicModel& model, const Scenario& scenario, const Eigen::VectorXd& x0,
                        const RunOptions& options = {});

struct UnitSummary {
  std::string name;
  double v_dc_initial = 0.0, v_dc_final = 0.0, v_dc_peak = 0.0, v_dc_min = 0.0;
  double p_e_initial = 0.0, p_e_final = 0.0, p_e_min = 0.0, p_e_max = 0.0;
  double p_e_swing = 0.0;          // max |p_e - p_e_initial|
  double settling_time = 0.0;      // s after the last event
  double energy_residual = 0.0;    // J, max over the run
  double energy_peak = 0.0;        // J, peak capacitor energy swing
  double energy_ratio = 0.0;       // residual / peak
};

struct ScenarioSummary {
  std::vector<UnitSummary> units;
  double sync_residual = 0.0;  // final max pairwise |dV*_i - dV*_j|
  double delta_p_e_total = 0.0;  // W
  double delta_p_load = 0.0;     // W
  double delta_p_loss = 0.0;     // W
  double last_event_time = 0.0;
};

ScenarioSummary summarize(const SimSystem& system, const Scenario& scenario, const TimeSeries& series);

}  // namespace cvsc::dynamics
