#pragma once

#include <complex>

#include <Eigen/Dense>

#include "cvsc/model.hpp"

namespace cvsc::wpg {

// Inverter line-to-line RMS output per volt of dc at m = 1.
inline constexpr double k_mod = 0.70710678118654752440;

// Equivalent-circuit constants derived from the operational data, machine pu.
struct SgFundamental {
  double omega_b = 0.0;  // rad/s
  double L_ad = 0.0, L_aq = 0.0, L_fd = 0.0, L_kd = 0.0, L_kq = 0.0, x_l = 0.0;
  double R_fd = 0.0, R_kd = 0.0, R_kq = 0.0, R_s = 0.0;
  Eigen::Matrix3d md_inv;  // (psi_d, psi_f, psi_kd) -> (i_d, i_fd, i_kd)
  Eigen::Matrix2d mq_inv;  // (psi_q, psi_kq) -> (i_q, i_kq)
};

SgFundamental derive_fundamental(const model::WpgParameters& params, double f_n);

struct SgInputs {
  double e_f = 0.0;
  double v_d = 0.0;
  double v_q = 0.0;
  double omega_r = 1.0;
};

struct SgCurrents {
  double i_d = 0.0, i_q = 0.0, i_fd = 0.0, i_kd = 0.0, i_kq = 0.0;
};

// Generator convention: positive i_d, i_q flow out of the stator.
SgCurrents sg_currents(const model::WpgState& state, const SgFundamental& fund);

struct FluxDerivatives {
  double psi_d = 0.0, psi_q = 0.0, psi_f = 0.0, psi_kd = 0.0, psi_kq = 0.0;
};

FluxDerivatives sg_electrical_derivatives(const model::WpgState& state, const SgInputs& inputs,
                                          const SgFundamental& fund);

double electromagnetic_torque(const model::WpgState& state, const SgFundamental& fund);

struct DriveTrainDerivatives {
  double omega_t = 0.0, omega_r = 0.0, theta_tw = 0.0;
};

DriveTrainDerivatives drive_train_derivatives(const model::WpgState& state, double t_mech, double t_e,
                                              const model::WpgParameters& params, double f_n);

struct GovernorRefs {
  double omega_ref = 1.2;
  double p_in_ref = 0.0;  // machine pu
};

struct TurbineGovernorOutput {
  double beta = 0.0;    // deg
  double t_mech = 0.0;  // pu
  double d_x_comp = 0.0;
};

// Pitch clamps on over-speed; the power PI integrator x_comp sets the
// mechanical torque at constant wind.
TurbineGovernorOutput turbine_governor(const model::WpgState& state, double p_in_measured,
                                       const GovernorRefs& refs, double x_comp,
                                       const model::WpgParameters& params);

struct FieldExciterOutput {
  double e_f = 0.0;
  double d_x_field = 0.0;
};

FieldExciterOutput field_exciter(double psi_f, double psi_f_ref, double x_field,
                                 const model::WpgParameters& params);

struct DcLinkInputs {
  double p_in = 0.0;  // W
  double i_s = 0.0;   // A
  double p_e = 0.0;   // W
};

double dc_link_derivative(double v_dc, const DcLinkInputs& inputs, double c);

double clamp_storage_reference(double i_s_ref, double v_dc, const model::WpgParameters& params);

double storage_current_derivative(double i_s, double i_s_ref, double v_dc,
                                  const model::WpgParameters& params);

// Machine pu on (P_n, V_tn).
std::complex<double> inverter_terminal_phasor(double m, double v_dc, double delta_theta,
                                              const model::WpgParameters& params);

// Stator-side ac voltage magnitude held by the rectifier at the boost ratio, machine pu.
double rectifier_voltage(const model::WpgParameters& params);

struct StatorVoltage {
  double v_d = 0.0, v_q = 0.0;
};

// Rotor-frame stator voltage for a load angle delta_r behind the rectifier source.
StatorVoltage stator_voltage(double delta_r, double v_s);

}  // namespace cvsc::wpg
