#pragma once

#include "cvsc/model.hpp"

namespace cvsc::controller {

struct CvscGains {
  double k_a = 10.0;    // rad/s per pu capacitor-voltage deviation
  double k_e = 0.2;     // 1/s
  double k_pg1 = 30.0;  // pu machine power per pu voltage deviation
  double k_pg2 = 15.0;  // storage path gain on power error
  double k_pg3 = 0.1;   // 1/s, SG restoration rate
  double v_dc_nom = 1110.0;
  bool has_governor = true;

  static CvscGains from_parameters(const model::WpgParameters& params, bool has_governor);
};

void validate(const CvscGains& gains);

double delta_vdc_star(double v_dc, double v_dc_nom);

double phase_angle_derivative(double v_dc, const CvscGains& gains);

// Integral exciter on the modulation index with conditional integration at
// the limits [0, m_max].
double exciter_derivative(double v_t, double v_t_ref, double k_e, double m, double m_max);

struct GovernorOutput {
  double p_me_ref = 0.0;  // W
  double i_s_ref = 0.0;   // A, before the storage rating clamp
  double p_in_ref = 0.0;  // W, target the SG power reference relaxes toward
};

// p_me_ref droops on capacitor voltage (K_pg1), storage closes the power
// error quickly (K_pg2), and the SG reference follows at rate K_pg3.
// Without a governor the schedule passes through and i_s_ref holds.
GovernorOutput governor_update(double v_dc, double p_me, double p_schedule, const CvscGains& gains,
                               double s_machine, double i_s_hold = 0.0);

// Rate of the SG power reference state toward its target, W/s.
double p_in_ref_derivative(double p_in_ref, const GovernorOutput& out, const CvscGains& gains);

double capacitor_energy(double v_dc, double v_dc0, double c);

}  // namespace cvsc::controller
