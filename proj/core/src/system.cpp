#include <algorithm>
#include <cmath>
#include <numbers>

#include "cvsc/dynamics.hpp"

namespace cvsc::dynamics {

using network::complex;

int StateLayout::index(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return static_cast<int>(i);
  }
  throw ReferenceError("unknown state '" + std::string(label) + "'");
}

std::vector<int> StateLayout::core_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < core.size(); ++i) {
    if (core[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

StateLayout make_layout(const std::vector<WpgUnit>& units) {
  static const char* ext[kExtStates] = {"delta_r", "x_comp", "x_field", "p_in_ref"};
  StateLayout layout;
  for (const auto& u : units) {
    for (auto n : model::WpgState::names()) {
      layout.labels.push_back(std::string(n) + "." + u.name);
      layout.core.push_back(true);
    }
    for (const char* n : ext) {
      layout.labels.push_back(std::string(n) + "." + u.name);
      layout.core.push_back(false);
    }
  }
  return layout;
}

SimSystem::SimSystem(model::NetworkModel network, std::vector<WpgUnit> units)
    : network_(std::move(network)), units_(std::move(units)) {
  model::validate(network_);
  if (units_.empty()) throw ValidationError({"system has no WPG units"});
  std::vector<std::string> problems;
  int slack_count = 0;
  for (const auto& u : units_) {
    const std::string label = "wpg." + u.name;
    if (network_.bus_index(u.bus) < 0) problems.push_back(label + ": unknown bus " + std::to_string(u.bus));
    try {
      model::validate(u.params, label);
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
    try {
      controller::validate(u.gains);
    } catch (const ValidationError& e) {
      for (const auto& p : e.problems()) problems.push_back(label + ": " + p);
    }
    if (u.pf_slack) ++slack_count;
    for (const auto& o : units_) {
      if (&o != &u && o.name == u.name && &o < &u) problems.push_back(label + ": duplicate unit name");
      if (&o != &u && o.bus == u.bus && &o < &u) problems.push_back(label + ": bus shared with another unit");
    }
  }
  if (slack_count != 1) problems.push_back("exactly one WPG must be the power-flow slack");
  if (!problems.empty()) throw ValidationError(std::move(problems));

  for (const auto& u : units_) fundamentals_.push_back(wpg::derive_fundamental(u.params, network_.f_n));
  layout_ = make_layout(units_);
}

int SimSystem::unit_index(std::string_view name) const {
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].name == name) return static_cast<int>(i);
  }
  throw ReferenceError("unknown WPG '" + std::string(name) + "'");
}

int SimSystem::pf_slack_bus() const {
  for (const auto& u : units_) {
    if (u.pf_slack) return u.bus;
  }
  throw ReferenceError("no power-flow slack unit");
}

std::vector<network::GeneratorDispatch> SimSystem::dispatch() const {
  std::vector<network::GeneratorDispatch> d;
  for (const auto& u : units_) d.push_back({u.bus, u.p_dispatch, u.v_setpoint});
  return d;
}

network::PowerFlowSolution SimSystem::solve_powerflow() const {
  return network::solve_powerflow(network_, dispatch(), pf_slack_bus());
}

std::vector<network::Source> SimSystem::sources() const {
  std::vector<network::Source> out;
  for (const auto& u : units_) {
    const auto& bus = network_.buses[network_.bus_index(u.bus)];
    const model::ImpedanceBase machine{u.params.P_n, u.params.V_tn};
    const model::ImpedanceBase system{network_.s_system, bus.v_base};
    const complex z(model::rebase_impedance(u.params.R_filter, machine, system),
                    model::rebase_impedance(u.params.L_filter, machine, system));
    out.push_back({u.bus, z});
  }
  return out;
}

Eigen::VectorXd SimSystem::state_scale() const {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(layout_.size());
  for (int i = 0; i < unit_count(); ++i) {
    const auto& p = units_[i].params;
    s(i * kUnitStates + 8) = p.V_dc_nom;
    s(i * kUnitStates + 11) = p.P_n / p.V_dc_nom;
  }
  return s;
}

DynamicModel::DynamicModel(SimSystem system, std::vector<UnitReferences> refs, network::AdmittanceMatrix y)
    : system_(std::move(system)), refs_(std::move(refs)), solver_(y, system_.sources()) {
  if (refs_.size() != system_.units().size()) throw Error("one reference block per unit is required");
}

DynamicModel DynamicModel::with_admittance(network::AdmittanceMatrix y) const {
  return DynamicModel(system_, refs_, std::move(y));
}

DynamicModel DynamicModel::with_references(std::vector<UnitReferences> refs) const {
  return DynamicModel(system_, std::move(refs), solver_.admittance());
}

void DynamicModel::project(Eigen::VectorXd& x) const {
  for (int i = 0; i < system_.unit_count(); ++i) {
    double& m = x(i * kUnitStates + 10);
    m = std::clamp(m, 0.0, system_.units()[i].params.m_max);
  }
}

Evaluation DynamicModel::evaluate(const Eigen::VectorXd& x) const {
  const auto& units = system_.units();
  const auto& net = system_.network();
  const int nu = system_.unit_count();
  if (x.size() != system_.layout().size()) throw Error("state vector has the wrong length");

  std::vector<complex> e(nu);
  for (int i = 0; i < nu; ++i) {
    const double* xi = x.data() + i * kUnitStates;
    const auto& u = units[i];
    const double v_base = net.buses[net.bus_index(u.bus)].v_base;
    e[i] = wpg::inverter_terminal_phasor(xi[10], xi[8], xi[9], u.params) * (u.params.V_tn / v_base);
  }

  Evaluation ev;
  ev.net = solver_.solve(e);
  ev.dx.resize(x.size());
  ev.units.resize(nu);
  const double omega_b = 2.0 * std::numbers::pi * net.f_n;

  for (int i = 0; i < nu; ++i) {
    const double* xi = x.data() + i * kUnitStates;
    double* fi = ev.dx.data() + i * kUnitStates;
    const auto& u = units[i];
    const auto& p = u.params;
    const auto& fund = system_.fundamentals()[i];
    const auto& ref = refs_[i];
    const model::WpgState s = model::WpgState::from_array(xi);
    const double delta_r = xi[kDeltaR];
    const double x_comp = xi[kXComp];
    const double x_field = xi[kXField];
    const double p_in_ref = xi[kPInRef];

    const wpg::SgCurrents cur = wpg::sg_currents(s, fund);
    const wpg::StatorVoltage vs = wpg::stator_voltage(delta_r, wpg::rectifier_voltage(p));
    const double p_in = vs.v_d * cur.i_d + vs.v_q * cur.i_q;
    const double t_e = s.psi_d * cur.i_q - s.psi_q * cur.i_d;

    const wpg::FieldExciterOutput fx = wpg::field_exciter(s.psi_f, ref.psi_f_ref, x_field, p);
    const wpg::FluxDerivatives dpsi =
        wpg::sg_electrical_derivatives(s, {fx.e_f, vs.v_d, vs.v_q, s.omega_r}, fund);
    const wpg::TurbineGovernorOutput tg = wpg::turbine_governor(s, p_in, {p.omega_ref, p_in_ref}, x_comp, p);
    const wpg::DriveTrainDerivatives dtr = wpg::drive_train_derivatives(s, tg.t_mech, t_e, p, net.f_n);

    const auto& so = ev.net.sources[i];
    const double p_e = so.p * net.s_system;
    const double q_e = so.q * net.s_system;
    const double v_t = std::abs(so.v_t);
    const double p_in_w = p_in * p.P_n;
    const double p_me = p_in_w + s.i_s * s.v_dc;

    const controller::GovernorOutput gov =
        controller::governor_update(s.v_dc, p_me, ref.p_schedule, u.gains, p.P_n, ref.i_s_hold);
    const double i_s_ref = wpg::clamp_storage_reference(gov.i_s_ref, s.v_dc, p);

    fi[0] = dpsi.psi_d;
    fi[1] = dpsi.psi_q;
    fi[2] = dpsi.psi_f;
    fi[3] = dpsi.psi_kd;
    fi[4] = dpsi.psi_kq;
    fi[5] = dtr.omega_r;
    fi[6] = dtr.omega_t;
    fi[7] = dtr.theta_tw;
    fi[8] = wpg::dc_link_derivative(s.v_dc, {p_in_w, s.i_s, p_e}, p.C);
    fi[9] = controller::phase_angle_derivative(s.v_dc, u.gains);
    fi[10] = controller::exciter_derivative(v_t, ref.v_t_ref, u.gains.k_e, s.m, p.m_max);
    fi[11] = wpg::storage_current_derivative(s.i_s, i_s_ref, s.v_dc, p);
    fi[kDeltaR] = omega_b * (s.omega_r - 1.0);
    fi[kXComp] = tg.d_x_comp;
    fi[kXField] = fx.d_x_field;
    fi[kPInRef] = controller::p_in_ref_derivative(p_in_ref * p.P_n, gov, u.gains) / p.P_n;

    UnitOutputs& o = ev.units[i];
    o.p_e = p_e;
    o.q_e = q_e;
    o.v_t = v_t;
    o.p_in = p_in_w;
    o.p_storage = s.i_s * s.v_dc;
    o.t_e = t_e;
    o.t_mech = tg.t_mech;
    o.beta = tg.beta;
    o.e_f = fx.e_f;
    o.i_s_ref = i_s_ref;
  }
  return ev;
}

Eigen::VectorXd DynamicModel::derivative(const Eigen::VectorXd& x) const { return evaluate(x).dx; }

}  // namespace cvsc::dynamics
