#include "cvsc/wpg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cvsc/error.hpp"

namespace cvsc::wpg {

using model::WpgParameters;
using model::WpgState;

SgFundamental derive_fundamental(const WpgParameters& p, double f_n) {
  model::validate(p);
  SgFundamental f;
  f.omega_b = 2.0 * std::numbers::pi * f_n;
  f.x_l = p.x_l;
  f.R_s = p.R_s;
  f.L_ad = p.x_d - p.x_l;
  f.L_aq = p.x_q - p.x_l;
  f.L_fd = f.L_ad * (p.x_d_p - p.x_l) / (p.x_d - p.x_d_p);
  f.L_kd = 1.0 / (1.0 / (p.x_d_pp - p.x_l) - 1.0 / f.L_ad - 1.0 / f.L_fd);
  f.L_kq = f.L_aq * (p.x_q_pp - p.x_l) / (p.x_q - p.x_q_pp);
  if (!(f.L_kd > 0.0) || !(f.L_kq > 0.0) || !(f.L_fd > 0.0)) {
    throw DomainError("machine reactances yield non-physical winding inductances");
  }
  // Rotor resistances place the open-circuit d-axis eigenvalues exactly at
  // T'_d0 and T''_d0: with a = 1/R_fd, b = 1/R_kd the rotor circuit has
  // trace l11 a + l22 b = sum and determinant det a b = product.
  const double l11 = f.L_ad + f.L_fd, l22 = f.L_ad + f.L_kd;
  const double det = l11 * l22 - f.L_ad * f.L_ad;
  const double sum = f.omega_b * (p.T_d0_p + p.T_d0_pp);
  const double product = f.omega_b * f.omega_b * p.T_d0_p * p.T_d0_pp;
  const double disc = sum * sum * det * det - 4.0 * l11 * l22 * det * product;
  if (!(disc >= 0.0)) throw DomainError("d-axis time constants are inconsistent with the reactances");
  const double a = (sum * det + std::sqrt(disc)) / (2.0 * l11 * det);
  const double b = (sum - l11 * a) / l22;
  f.R_fd = 1.0 / a;
  f.R_kd = 1.0 / b;
  f.R_kq = (f.L_aq + f.L_kq) / (f.omega_b * p.T_q0_pp);

  Eigen::Matrix3d md;
  md << -(f.L_ad + f.x_l), f.L_ad, f.L_ad,
        -f.L_ad, f.L_ad + f.L_fd, f.L_ad,
        -f.L_ad, f.L_ad, f.L_ad + f.L_kd;
  Eigen::Matrix2d mq;
  mq << -(f.L_aq + f.x_l), f.L_aq,
        -f.L_aq, f.L_aq + f.L_kq;
  f.md_inv = md.inverse();
  f.mq_inv = mq.inverse();
  return f;
}

SgCurrents sg_currents(const WpgState& s, const SgFundamental& f) {
  const Eigen::Vector3d d = f.md_inv * Eigen::Vector3d(s.psi_d, s.psi_f, s.psi_kd);
  const Eigen::Vector2d q = f.mq_inv * Eigen::Vector2d(s.psi_q, s.psi_kq);
  return {d(0), q(0), d(1), d(2), q(1)};
}

FluxDerivatives sg_electrical_derivatives(const WpgState& s, const SgInputs& in, const SgFundamental& f) {
  const SgCurrents c = sg_currents(s, f);
  FluxDerivatives d;
  d.psi_d = f.omega_b * (in.v_d + f.R_s * c.i_d + in.omega_r * s.psi_q);
  d.psi_q = f.omega_b * (in.v_q + f.R_s * c.i_q - in.omega_r * s.psi_d);
  d.psi_f = f.omega_b * f.R_fd / f.L_ad * (in.e_f - f.L_ad * c.i_fd);
  d.psi_kd = -f.omega_b * f.R_kd * c.i_kd;
  d.psi_kq = -f.omega_b * f.R_kq * c.i_kq;
  return d;
}

double electromagnetic_torque(const WpgState& s, const SgFundamental& f) {
  const SgCurrents c = sg_currents(s, f);
  return s.psi_d * c.i_q - s.psi_q * c.i_d;
}

DriveTrainDerivatives drive_train_derivatives(const WpgState& s, double t_mech, double t_e,
                                              const WpgParameters& p, double f_n) {
  const double omega_b = 2.0 * std::numbers::pi * f_n;
  const double shaft = p.K_shaft * s.theta_tw + p.D_shaft * (s.omega_t - s.omega_r);
  DriveTrainDerivatives d;
  d.omega_t = (t_mech - shaft) / (2.0 * p.H_t);
  d.omega_r = (shaft - t_e) / (2.0 * p.H_g);
  d.theta_tw = omega_b * (s.omega_t - s.omega_r);
  return d;
}

TurbineGovernorOutput turbine_governor(const WpgState& s, double p_in_measured, const GovernorRefs& refs,
                                       double x_comp, const WpgParameters& p) {
  TurbineGovernorOutput out;
  out.beta = std::clamp(p.K_p_pitch * (s.omega_r - refs.omega_ref), 0.0, p.beta_max);
  const double err = refs.p_in_ref - p_in_measured;
  out.t_mech = p.K_p_comp * err + x_comp - p.k_beta * out.beta;
  out.d_x_comp = p.K_i_comp * err;
  return out;
}

FieldExciterOutput field_exciter(double psi_f, double psi_f_ref, double x_field, const WpgParameters& p) {
  const double err = psi_f_ref - psi_f;
  return {p.K_p_field * err + x_field, p.K_i_field * err};
}

double dc_link_derivative(double v_dc, const DcLinkInputs& in, double c) {
  if (!(v_dc > 0.0)) throw DomainError("capacitor voltage must be positive");
  const double p_me = in.p_in + in.i_s * v_dc;
  return (p_me - in.p_e) / (c * v_dc);
}

double clamp_storage_reference(double i_s_ref, double v_dc, const WpgParameters& p) {
  if (!(v_dc > 0.0)) throw DomainError("capacitor voltage must be positive");
  const double lim = p.P_storage / v_dc;
  return std::clamp(i_s_ref, -lim, lim);
}

double storage_current_derivative(double i_s, double i_s_ref, double v_dc, const WpgParameters& p) {
  const double ref = clamp_storage_reference(i_s_ref, v_dc, p);
  return p.k_track * (ref - i_s) / p.L_boost;
}

std::complex<double> inverter_terminal_phasor(double m, double v_dc, double delta_theta,
                                              const WpgParameters& p) {
  const double mag = k_mod * m * v_dc / p.V_tn;
  return {mag * std::cos(delta_theta), mag * std::sin(delta_theta)};
}

double rectifier_voltage(const WpgParameters& p) {
  return std::numbers::pi / (3.0 * std::numbers::sqrt2) * (1.0 - p.D_duty) * p.V_dc_nom / p.V_n;
}

StatorVoltage stator_voltage(double delta_r, double v_s) {
  return {v_s * std::sin(delta_r), v_s * std::cos(delta_r)};
}

}  // namespace cvsc::wpg
