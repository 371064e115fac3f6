#include "cvsc/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "cvsc/error.hpp"

namespace cvsc {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream out;
  out << problems.size() << " problem(s)";
  for (const auto& p : problems) out << "\n  " << p;
  return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace cvsc

namespace cvsc::model {

double rebase_power(double value_pu, double from_base, double to_base) {
  if (!(from_base > 0.0) || !(to_base > 0.0)) {
    throw InvalidBaseError("power base must be positive");
  }
  return value_pu * from_base / to_base;
}

double rebase_impedance(double z_pu, ImpedanceBase from, ImpedanceBase to) {
  if (!(from.s > 0.0) || !(from.v > 0.0) || !(to.s > 0.0) || !(to.v > 0.0)) {
    throw InvalidBaseError("impedance base must be positive");
  }
  const double z_from = from.v * from.v / from.s;
  const double z_to = to.v * to.v / to.s;
  return z_pu * z_from / z_to;
}

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::generator: return "generator";
    case BusKind::load: return "load";
    case BusKind::junction: return "junction";
  }
  return "junction";
}

BusKind bus_kind_from_string(std::string_view text) {
  if (text == "generator") return BusKind::generator;
  if (text == "load") return BusKind::load;
  if (text == "junction") return BusKind::junction;
  throw Error("unknown bus kind '" + std::string(text) + "'");
}

std::string_view to_string(LoadModel model) {
  return model == LoadModel::constant_power ? "power" : "impedance";
}

LoadModel load_model_from_string(std::string_view text) {
  if (text == "power" || text == "constant-power") return LoadModel::constant_power;
  if (text == "impedance" || text == "constant-impedance") return LoadModel::constant_impedance;
  throw Error("unknown load model '" + std::string(text) + "'");
}

int NetworkModel::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int NetworkModel::branch_index(std::string_view name) const {
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (branches[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void validate(const NetworkModel& model) {
  std::vector<std::string> problems;
  if (!(model.s_system > 0.0)) problems.push_back("bases: s_system must be positive");
  if (!(model.f_n > 0.0)) problems.push_back("bases: f_n must be positive");
  if (model.buses.empty()) problems.push_back("buses: no buses defined");

  std::set<int> ids;
  for (const auto& b : model.buses) {
    if (!ids.insert(b.id).second) problems.push_back("bus " + std::to_string(b.id) + ": duplicate id");
    if (!(b.v_base > 0.0)) problems.push_back("bus " + std::to_string(b.id) + ": v_base must be positive");
  }
  std::set<std::string> names;
  for (const auto& br : model.branches) {
    const std::string label = "branch " + br.name;
    if (br.name.empty()) problems.push_back("branch without a name");
    else if (!names.insert(br.name).second) problems.push_back(label + ": duplicate name");
    if (!ids.count(br.from)) problems.push_back(label + ": unknown from-bus " + std::to_string(br.from));
    if (!ids.count(br.to)) problems.push_back(label + ": unknown to-bus " + std::to_string(br.to));
    if (br.from == br.to) problems.push_back(label + ": from and to are the same bus");
    if (br.x == 0.0 || !std::isfinite(br.x)) problems.push_back(label + ": x must be nonzero");
    if (!(br.tap > 0.0)) problems.push_back(label + ": tap must be positive");
    if (!std::isfinite(br.r) || !std::isfinite(br.b_shunt)) problems.push_back(label + ": non-finite r or b");
  }
  for (const auto& ld : model.loads) {
    const std::string label = "load at bus " + std::to_string(ld.bus);
    if (!ids.count(ld.bus)) problems.push_back(label + ": unknown bus");
    if (!std::isfinite(ld.p) || !std::isfinite(ld.q)) problems.push_back(label + ": non-finite p or q");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

WpgParameters datasheet_defaults() { return WpgParameters{}; }

void validate(const WpgParameters& p, std::string_view label) {
  std::vector<std::string> problems;
  const std::string pre = std::string(label) + ": ";
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) problems.push_back(pre + name + " must be positive");
  };
  auto non_negative = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) problems.push_back(pre + name + " must be non-negative");
  };
  positive(p.P_mn, "P_mn");
  positive(p.P_n, "P_n");
  positive(p.V_n, "V_n");
  positive(p.V_tn, "V_tn");
  positive(p.L_filter, "L_filter");
  non_negative(p.R_filter, "R_filter");
  positive(p.V_dc_nom, "V_dc_nom");
  positive(p.C, "C");
  positive(p.L_boost, "L_boost");
  for (auto [v, n] : {std::pair{p.K_p_pitch, "K_p_pitch"}, {p.K_p_comp, "K_p_comp"},
                      {p.K_i_comp, "K_i_comp"}, {p.K_p_field, "K_p_field"},
                      {p.K_i_field, "K_i_field"}, {p.K_pg1, "K_pg1"}, {p.K_pg2, "K_pg2"},
                      {p.K_pg3, "K_pg3"}, {p.K_a, "K_a"}, {p.K_e, "K_e"}}) {
    non_negative(v, n);
  }
  positive(p.pole_pairs, "pole_pairs");
  if (!(p.D_duty >= 0.0 && p.D_duty < 1.0)) problems.push_back(pre + "D_duty must lie in [0, 1)");
  positive(p.x_l, "x_l");
  if (!(p.x_d > p.x_d_p && p.x_d_p > p.x_d_pp && p.x_d_pp > 0.0)) {
    problems.push_back(pre + "reactances must satisfy x_d > x'_d > x''_d > 0");
  }
  if (!(p.x_q > p.x_q_pp && p.x_q_pp > 0.0)) {
    problems.push_back(pre + "reactances must satisfy x_q > x''_q > 0");
  }
  if (!(p.x_d_pp > p.x_l && p.x_q_pp > p.x_l)) {
    problems.push_back(pre + "subtransient reactances must exceed x_l");
  }
  positive(p.T_d0_p, "T'_d0");
  positive(p.T_d0_pp, "T''_d0");
  positive(p.T_q0_pp, "T''_q0");
  if (!(p.T_d0_p > p.T_d0_pp)) problems.push_back(pre + "T'_d0 must exceed T''_d0");
  non_negative(p.R_s, "R_s");
  positive(p.H_t, "H_t");
  positive(p.H_g, "H_g");
  positive(p.K_shaft, "K_shaft");
  non_negative(p.D_shaft, "D_shaft");
  positive(p.P_storage, "P_storage");
  positive(p.k_track, "k_track");
  positive(p.omega_ref, "omega_ref");
  non_negative(p.k_beta, "k_beta");
  non_negative(p.beta_max, "beta_max");
  positive(p.m_max, "m_max");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

std::array<double, WpgState::size> WpgState::to_array() const {
  return {psi_d, psi_q, psi_f, psi_kd, psi_kq, omega_r, omega_t, theta_tw, v_dc, delta_theta, m, i_s};
}

WpgState WpgState::from_array(const double* v) {
  WpgState s;
  s.psi_d = v[0];
  s.psi_q = v[1];
  s.psi_f = v[2];
  s.psi_kd = v[3];
  s.psi_kq = v[4];
  s.omega_r = v[5];
  s.omega_t = v[6];
  s.theta_tw = v[7];
  s.v_dc = v[8];
  s.delta_theta = v[9];
  s.m = v[10];
  s.i_s = v[11];
  return s;
}

const std::array<std::string_view, WpgState::size>& WpgState::names() {
  static const std::array<std::string_view, size> n = {
      "psi_d", "psi_q", "psi_f", "psi_kd", "psi_kq", "omega_r",
      "omega_t", "theta_tw", "v_dc", "delta_theta", "m", "i_s"};
  return n;
}

}  // namespace cvsc::model
