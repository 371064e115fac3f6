#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cvsc::model {

// Per-unit bookkeeping for one device.
struct BaseSet {
  double s_system = 100e6;  // VA
  double s_machine = 889e6; // VA
  double v_base = 575.0;    // V, line-to-line
  double f_n = 60.0;        // Hz
};

double rebase_power(double value_pu, double from_base, double to_base);

struct ImpedanceBase {
  double s;  // VA
  double v;  // V
};

double rebase_impedance(double z_pu, ImpedanceBase from, ImpedanceBase to);

enum class BusKind { generator, load, junction };

std::string_view to_string(BusKind kind);
BusKind bus_kind_from_string(std::string_view text);

struct Bus {
  int id = 0;
  double v_base = 1.0;
  BusKind kind = BusKind::junction;
};

struct Branch {
  std::string name;
  int from = 0;
  int to = 0;
  double r = 0.0;        // pu, system base
  double x = 0.0;        // pu
  double b_shunt = 0.0;  // pu, total line charging
  double tap = 1.0;      // off-nominal ratio on the from side
  bool in_service = true;
};

enum class LoadModel { constant_impedance, constant_power };

std::string_view to_string(LoadModel model);
LoadModel load_model_from_string(std::string_view text);

struct Load {
  int bus = 0;
  double p = 0.0;  // W at nominal voltage
  double q = 0.0;  // var at nominal voltage
  LoadModel model = LoadModel::constant_power;
};

struct NetworkModel {
  double s_system = 100e6;
  double f_n = 60.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Load> loads;

  // Index of bus id in `buses`, or -1.
  int bus_index(int id) const;
  int branch_index(std::string_view name) const;
};

// Throws ValidationError listing every problem.
void validate(const NetworkModel& model);

// Data-sheet record plus the drive-train calibration and the few controller
// constants the model needs but the data sheet leaves open.
struct WpgParameters {
  double P_mn = 800e6;
  double P_n = 889e6;
  double V_n = 730.0;
  double V_tn = 575.0;
  double L_filter = 0.15;
  double R_filter = 0.003;
  double V_dc_nom = 1110.0;
  double C = 36.0;
  double L_boost = 0.0012;
  double K_p_pitch = 15.0;
  double K_p_comp = 1.5;
  double K_i_comp = 6.0;
  double K_p_field = 10.0;
  double K_i_field = 20.0;
  double K_pg1 = 30.0;
  double K_pg2 = 15.0;
  double K_pg3 = 0.1;
  double pole_pairs = 1.0;
  double K_a = 10.0;
  double K_e = 0.2;
  double D_duty = 0.19;
  double x_d = 1.305;
  double x_d_p = 0.296;
  double x_d_pp = 0.252;
  double x_q = 0.474;
  double x_q_pp = 0.243;
  double x_l = 0.18;
  double T_d0_p = 4.49;
  double T_d0_pp = 0.0681;
  double T_q0_pp = 0.0513;
  double R_s = 0.006;

  // calibrated, not from the data sheet
  double H_t = 3.5;
  double H_g = 0.6;
  double K_shaft = 0.05;
  double D_shaft = 6.0;

  double P_storage = 300e6;  // W, storage power rating
  double k_track = 1.0;      // ohm, storage current tracking gain
  double omega_ref = 1.2;    // pu, pitch activation speed
  double k_beta = 0.03;      // pu torque per degree of pitch
  double beta_max = 27.0;    // deg
  double m_max = 1.0;
};

WpgParameters datasheet_defaults();

// Throws ValidationError listing every problem.
void validate(const WpgParameters& params, std::string_view label = "wpg");

struct WpgState {
  static constexpr std::size_t size = 12;

  double psi_d = 0.0;
  double psi_q = 0.0;
  double psi_f = 0.0;
  double psi_kd = 0.0;
  double psi_kq = 0.0;
  double omega_r = 1.0;
  double omega_t = 1.0;
  double theta_tw = 0.0;
  double v_dc = 1110.0;  // V
  double delta_theta = 0.0;
  double m = 0.0;
  double i_s = 0.0;  // A

  std::array<double, size> to_array() const;
  static WpgState from_array(const double* values);
  static const std::array<std::string_view, size>& names();
};

}  // namespace cvsc::model
