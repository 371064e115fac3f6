#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvsc/dynamics.hpp"

namespace cvsc::smallsignal {

using complex = std::complex<double>;

struct StateSpaceModel {
  Eigen::MatrixXd a;
  std::vector<std::string> labels;
  std::vector<bool> core;
  Eigen::VectorXd x_eq;

  int n() const { return static_cast<int>(a.rows()); }
  // Submatrix over the given states, others frozen at the operating point.
  StateSpaceModel restrict_to(const std::vector<int>& indices) const;
  StateSpaceModel restrict_to_core() const;
};

// Central differences, h_i = max(1e-6, 1e-6 |x_i|).
Eigen::MatrixXd finite_difference_jacobian(const dynamics::Rhs& f, const Eigen::VectorXd& x,
                                           const std::vector<std::string>& labels = {});

StateSpaceModel finite_difference_jacobian(const dynamics::DynamicModel& model, const Eigen::VectorXd& x_eq);

struct EigenDecomposition {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd right;  // columns
  Eigen::MatrixXcd left;   // rows, biorthonormal: left * right = I
  bool reliable = true;
  double max_residual = 0.0;  // max ||A r - lambda r|| / (||A|| ||r||)
};

// Parlett-Reinsch balancing; returns the diagonal scaling d with
// balanced = diag(d)^-1 * a * diag(d).
Eigen::VectorXd balance(Eigen::MatrixXd& a);

// Householder reduction to upper Hessenberg form, in place.
void hessenberg(Eigen::MatrixXd& a);

// Francis double-shift QR on an upper Hessenberg matrix; destroys h.
Eigen::VectorXcd hessenberg_eigenvalues(Eigen::MatrixXd& h, int max_sweeps_per_value = 60);

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a);

EigenDecomposition eig_nonsymmetric(const Eigen::MatrixXd& a);

struct Participation {
  Eigen::MatrixXd factors;  // (state, mode), columns sum to one
  std::vector<int> dominant;
  bool reliable = true;
};

Participation participation_factors(const Eigen::MatrixXcd& right, const Eigen::MatrixXcd& left);

struct Mode {
  complex eigenvalue;
  double frequency = 0.0;  // Hz
  double damping = 0.0;
  int dominant = -1;
  std::string dominant_state;
  bool extension = false;  // dominant state lies outside the 12-per-unit core set
  Eigen::VectorXd participation;
};

std::vector<Mode> compute_modes(const StateSpaceModel& ss, bool* reliable = nullptr);

struct ModeRow {
  std::string index;  // "1,2" for a conjugate pair
  complex eigenvalue;
  std::optional<double> frequency;
  std::optional<double> damping;
  std::string dominant_state;
  std::string participation_top3;  // "psi_q.1:0.48;psi_d.1:0.47;..."
  bool extension = false;
  int multiplicity = 1;  // 2 for a conjugate pair
};

struct ModeReport {
  std::vector<ModeRow> rows;
};

ModeReport build_mode_report(const std::vector<Mode>& modes, const std::vector<std::string>& labels);

struct KaCurve {
  double k_a = 0.0;
  std::vector<double> magnitude;
  bool ok = true;
  std::string warning;
};

struct KaSweepResult {
  std::vector<double> omega;  // rad/s
  std::vector<KaCurve> curves;
};

std::vector<double> log_grid(double lo, double hi, int points);

struct KaSweepOptions {
  int unit = 0;      // channel unit index
  int points = 81;   // log grid over 0.1 - 1000 rad/s
  unsigned threads = 1;
};

// Magnitude of the linearized V_dc -> P_e channel of one unit with the
// capacitor voltage entering through the angle law:
// b = e_dtheta K_a / V_dc_nom, c = dP_e/dx (machine pu).
KaSweepResult ka_sweep(const dynamics::SimSystem& system, const std::vector<double>& ka_values,
                       const KaSweepOptions& options = {});

}  // namespace cvsc::smallsignal
