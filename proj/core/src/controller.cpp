#include "cvsc/controller.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "cvsc/error.hpp"

namespace cvsc::controller {

CvscGains CvscGains::from_parameters(const model::WpgParameters& p, bool has_governor) {
  return {p.K_a, p.K_e, p.K_pg1, p.K_pg2, p.K_pg3, p.V_dc_nom, has_governor};
}

void validate(const CvscGains& g) {
  std::vector<std::string> problems;
  if (!(g.k_a >= 0.0)) problems.emplace_back("cvsc: k_a must be non-negative");
  if (!(g.k_e >= 0.0)) problems.emplace_back("cvsc: k_e must be non-negative");
  if (!(g.k_pg1 >= 0.0) || !(g.k_pg2 >= 0.0) || !(g.k_pg3 >= 0.0)) {
    problems.emplace_back("cvsc: governor gains must be non-negative");
  }
  if (!(g.v_dc_nom > 0.0)) problems.emplace_back("cvsc: v_dc_nom must be positive");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

double delta_vdc_star(double v_dc, double v_dc_nom) {
  if (!(v_dc_nom > 0.0)) throw DomainError("nominal capacitor voltage must be positive");
  return (v_dc - v_dc_nom) / v_dc_nom;
}

double phase_angle_derivative(double v_dc, const CvscGains& g) {
  return g.k_a * delta_vdc_star(v_dc, g.v_dc_nom);
}

double exciter_derivative(double v_t, double v_t_ref, double k_e, double m, double m_max) {
  const double rate = k_e * (v_t_ref - v_t);
  if ((m >= m_max && rate > 0.0) || (m <= 0.0 && rate < 0.0)) return 0.0;
  return rate;
}

GovernorOutput governor_update(double v_dc, double p_me, double p_schedule, const CvscGains& g,
                               double s_machine, double i_s_hold) {
  if (!(v_dc > 0.0)) throw DomainError("capacitor voltage must be positive");
  if (!g.has_governor) return {p_schedule, i_s_hold, p_schedule};
  GovernorOutput out;
  out.p_me_ref = p_schedule + g.k_pg1 * (g.v_dc_nom - v_dc) / g.v_dc_nom * s_machine;
  out.i_s_ref = g.k_pg2 * (out.p_me_ref - p_me) / g.v_dc_nom;
  out.p_in_ref = out.p_me_ref;
  return out;
}

double p_in_ref_derivative(double p_in_ref, const GovernorOutput& out, const CvscGains& g) {
  return g.k_pg3 * (out.p_in_ref - p_in_ref);
}

double capacitor_energy(double v_dc, double v_dc0, double c) {
  if (!(c > 0.0)) throw DomainError("capacitance must be positive");
  return 0.5 * c * (v_dc * v_dc - v_dc0 * v_dc0);
}

}  // namespace cvsc::controller
