#include <cmath>

#include "cvsc/dynamics.hpp"

namespace cvsc::dynamics {

using network::complex;

double scaled_norm(const Eigen::VectorXd& dx, const Eigen::VectorXd& scale) {
  double n = 0.0;
  for (Eigen::Index i = 0; i < dx.size(); ++i) {
    const double s = scale.size() ? scale(i) : 1.0;
    n = std::max(n, std::abs(dx(i)) / s);
  }
  return n;
}

Eigen::MatrixXd numeric_jacobian(const Rhs& f, const Eigen::VectorXd& x, const Eigen::VectorXd& fx,
                                 const Eigen::VectorXd& steps, bool central) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd j(fx.size(), n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = steps(k);
    xp(k) = x(k) + h;
    const Eigen::VectorXd fp = f(xp);
    if (central) {
      xp(k) = x(k) - h;
      const Eigen::VectorXd fm = f(xp);
      j.col(k) = (fp - fm) / (2.0 * h);
    } else {
      j.col(k) = (fp - fx) / h;
    }
    xp(k) = x(k);
  }
  return j;
}

namespace {

// Back-solves one unit from its terminal conditions.
void initial_unit_state(const SimSystem& sys, int i, const network::PowerFlowSolution& pf, double* xi,
                        UnitReferences& ref) {
  const auto& net = sys.network();
  const auto& u = sys.units()[i];
  const auto& p = u.params;
  const auto& f = sys.fundamentals()[i];
  const auto src = sys.sources()[i];
  const double v_base = net.buses[net.bus_index(u.bus)].v_base;

  const auto& g = pf.generator(u.bus);
  const complex s(g.p / net.s_system, g.q / net.s_system);
  const complex vt = pf.voltage(u.bus);
  const complex i_f = std::conj(s / vt);
  const complex e_sys = vt + src.z_filter * i_f;
  const double p_e = (e_sys * std::conj(i_f)).real() * net.s_system;
  const complex e = e_sys * (v_base / p.V_tn);

  model::WpgState st;
  st.v_dc = p.V_dc_nom;
  st.delta_theta = std::arg(e);
  st.m = std::abs(e) * p.V_tn / (wpg::k_mod * p.V_dc_nom);
  st.i_s = 0.0;

  // Unity power factor on the rectifier source.
  const double p_in = p_e / p.P_n;
  const double v_s = wpg::rectifier_voltage(p);
  const double cur = p_in / v_s;
  const complex eq = v_s + complex(p.R_s, p.x_q) * cur;
  const double d = std::arg(eq);
  const double v_d = v_s * std::sin(d), v_q = v_s * std::cos(d);
  const double i_d = cur * std::sin(d), i_q = cur * std::cos(d);
  st.psi_d = v_q + p.R_s * i_q;
  st.psi_q = -(v_d + p.R_s * i_d);
  const double i_fd = (st.psi_d + (f.L_ad + f.x_l) * i_d) / f.L_ad;
  st.psi_f = -f.L_ad * i_d + (f.L_ad + f.L_fd) * i_fd;
  st.psi_kd = -f.L_ad * i_d + f.L_ad * i_fd;
  st.psi_kq = -f.L_aq * i_q;
  st.omega_r = 1.0;
  st.omega_t = 1.0;
  const double t_e = st.psi_d * i_q - st.psi_q * i_d;
  st.theta_tw = t_e / p.K_shaft;

  const auto a = st.to_array();
  std::copy(a.begin(), a.end(), xi);
  xi[kDeltaR] = d;
  xi[kXComp] = t_e;
  xi[kXField] = f.L_ad * i_fd;
  xi[kPInRef] = p_in;

  ref.v_t_ref = std::abs(vt);
  ref.psi_f_ref = st.psi_f;
  ref.p_schedule = p_e;
  ref.i_s_hold = 0.0;
}

}  // namespace

Equilibrium refine_equilibrium(const DynamicModel& model, Eigen::VectorXd x, const TrimOptions& options) {
  const Eigen::VectorXd scale = model.system().state_scale();
  const Rhs f = [&](const Eigen::VectorXd& z) { return model.derivative(z); };
  Eigen::VectorXd fx = f(x);
  double res = scaled_norm(fx, scale);
  int it = 0;
  for (; res >= options.tolerance; ++it) {
    if (it >= options.max_iterations || !std::isfinite(res)) {
      throw TrimError("trim did not converge, scaled derivative norm " + std::to_string(res), res);
    }
    Eigen::VectorXd steps(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) steps(k) = 1e-7 * std::max(scale(k), std::abs(x(k)));
    const Eigen::MatrixXd j = numeric_jacobian(f, x, fx, steps, true);
    // Scaled system; the common angle direction is singular, so take the
    // minimum-norm correction.
    const Eigen::MatrixXd js = scale.cwiseInverse().asDiagonal() * j * scale.asDiagonal();
    const Eigen::VectorXd rs = fx.cwiseQuotient(scale);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(js);
    cod.setThreshold(1e-12);
    const Eigen::VectorXd dz = cod.solve(rs);
    Eigen::VectorXd step = scale.cwiseProduct(dz);
    // Damped update: shrink until the residual decreases.
    double lambda = 1.0;
    Eigen::VectorXd xn, fn;
    double rn = res;
    for (int k = 0; k < 12; ++k) {
      xn = x - lambda * step;
      try {
        fn = f(xn);
        rn = scaled_norm(fn, scale);
      } catch (const Error&) {
        rn = INFINITY;
      }
      if (rn < res || rn < options.tolerance) break;
      lambda *= 0.5;
    }
    if (!(rn < res) && !(rn < options.tolerance)) {
      throw TrimError("trim stalled, scaled derivative norm " + std::to_string(res), res);
    }
    x = xn;
    fx = fn;
    res = rn;
  }
  return Equilibrium{model, std::move(x), res, it};
}

Equilibrium trim_equilibrium(const SimSystem& sys, const network::PowerFlowSolution& pf,
                             const TrimOptions& options) {
  if (!(pf.mismatch < 1e-6)) throw TrimError("power flow is not converged", pf.mismatch);
  const network::AdmittanceMatrix y = network::fold_loads(network::build_ybus(sys.network()), sys.network(), pf.v);

  const int nu = sys.unit_count();
  Eigen::VectorXd x(sys.layout().size());
  std::vector<UnitReferences> refs(nu);
  for (int i = 0; i < nu; ++i) initial_unit_state(sys, i, pf, x.data() + i * kUnitStates, refs[i]);

  DynamicModel model(sys, std::move(refs), y);
  return refine_equilibrium(model, std::move(x), options);
}

}  // namespace cvsc::dynamics
