#include <cmath>
#include <map>

#include "cvsc/error.hpp"
#include "cvsc/network.hpp"

namespace cvsc::network {

complex PowerFlowSolution::voltage(int bus_id) const {
  for (std::size_t i = 0; i < bus_ids.size(); ++i) {
    if (bus_ids[i] == bus_id) return v(static_cast<Eigen::Index>(i));
  }
  throw ReferenceError("unknown bus " + std::to_string(bus_id));
}

const GeneratorResult& PowerFlowSolution::generator(int bus_id) const {
  for (const auto& g : generators) {
    if (g.bus == bus_id) return g;
  }
  throw ReferenceError("no generator at bus " + std::to_string(bus_id));
}

PowerFlowSolution solve_powerflow(const model::NetworkModel& model,
                                  const std::vector<GeneratorDispatch>& dispatch, int slack_bus,
                                  const PowerFlowOptions& options) {
  const AdmittanceMatrix ybus = build_ybus(model);
  const int n = static_cast<int>(model.buses.size());
  const Eigen::MatrixXcd& y = ybus.matrix();

  std::map<int, const GeneratorDispatch*> gen;
  for (const auto& g : dispatch) {
    if (model.bus_index(g.bus) < 0) throw ReferenceError("dispatch names unknown bus " + std::to_string(g.bus));
    if (!(g.v > 0.0)) throw DomainError("voltage setpoint must be positive at bus " + std::to_string(g.bus));
    gen[g.bus] = &g;
  }
  for (const auto& b : model.buses) {
    if (b.kind == model::BusKind::generator && !gen.count(b.id)) {
      throw ReferenceError("dispatch does not cover generator bus " + std::to_string(b.id));
    }
  }
  if (!gen.count(slack_bus)) throw ReferenceError("slack bus " + std::to_string(slack_bus) + " is not a generator");
  const int slack = model.bus_index(slack_bus);

  Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(n);
  for (const auto& ld : model.loads) {
    if (ld.model != model::LoadModel::constant_power) continue;
    const int k = model.bus_index(ld.bus);
    p_spec(k) -= ld.p / model.s_system;
    q_spec(k) -= ld.q / model.s_system;
  }
  Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
  std::vector<bool> is_pv(n, false);
  for (const auto& [bus, g] : gen) {
    const int k = model.bus_index(bus);
    vm(k) = g->v;
    if (k != slack) {
      is_pv[k] = true;
      p_spec(k) += g->p / model.s_system;
    }
  }
  std::vector<int> ang, mag;  // unknown angle / magnitude bus indices
  for (int k = 0; k < n; ++k) {
    if (k == slack) continue;
    ang.push_back(k);
    if (!is_pv[k]) mag.push_back(k);
  }
  const int na = static_cast<int>(ang.size());
  const int nm = static_cast<int>(mag.size());

  auto injections = [&](Eigen::VectorXcd& v, Eigen::VectorXcd& s) {
    for (int k = 0; k < n; ++k) v(k) = std::polar(vm(k), va(k));
    s = v.cwiseProduct((y * v).conjugate());
  };

  Eigen::VectorXcd v(n), s(n);
  double mismatch = 0.0;
  int iter = 0;
  for (;; ++iter) {
    injections(v, s);
    Eigen::VectorXd f(na + nm);
    for (int i = 0; i < na; ++i) f(i) = p_spec(ang[i]) - s(ang[i]).real();
    for (int i = 0; i < nm; ++i) f(na + i) = q_spec(mag[i]) - s(mag[i]).imag();
    mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(mismatch)) {
      throw DivergenceError("power flow diverged (non-finite mismatch)", mismatch, iter);
    }
    if (mismatch < options.tolerance) break;
    if (iter >= options.max_iterations) {
      throw DivergenceError("power flow did not converge in " + std::to_string(iter) +
                                " iterations, mismatch " + std::to_string(mismatch) + " pu",
                            mismatch, iter);
    }

    // Polar Jacobian of (P, Q) with respect to (angle, magnitude).
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(na + nm, na + nm);
    const Eigen::VectorXcd iinj = y * v;
    auto dS_dva = [&](int k, int j) {
      // dS_k/dθ_j
      if (k == j) return complex(0.0, 1.0) * (s(k) - v(k) * std::conj(y(k, k) * v(k)));
      return -complex(0.0, 1.0) * v(k) * std::conj(y(k, j) * v(j));
    };
    auto dS_dvm = [&](int k, int j) {
      const complex uj = v(j) / vm(j);
      if (k == j) return uj * std::conj(iinj(k)) + v(k) * std::conj(y(k, k) * uj);
      return v(k) * std::conj(y(k, j) * uj);
    };
    for (int r = 0; r < na; ++r) {
      for (int c = 0; c < na; ++c) jac(r, c) = dS_dva(ang[r], ang[c]).real();
      for (int c = 0; c < nm; ++c) jac(r, na + c) = dS_dvm(ang[r], mag[c]).real();
    }
    for (int r = 0; r < nm; ++r) {
      for (int c = 0; c < na; ++c) jac(na + r, c) = dS_dva(mag[r], ang[c]).imag();
      for (int c = 0; c < nm; ++c) jac(na + r, na + c) = dS_dvm(mag[r], mag[c]).imag();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      throw DivergenceError("power-flow Jacobian is singular", mismatch, iter);
    }
    const Eigen::VectorXd dx = lu.solve(f);
    for (int i = 0; i < na; ++i) va(ang[i]) += dx(i);
    for (int i = 0; i < nm; ++i) vm(mag[i]) += dx(na + i);
  }

  PowerFlowSolution sol;
  sol.v = v;
  sol.mismatch = mismatch;
  sol.iterations = iter;
  sol.slack_bus = slack_bus;
  for (const auto& b : model.buses) sol.bus_ids.push_back(b.id);
  for (const auto& g : dispatch) {
    const int k = model.bus_index(g.bus);
    double pl = 0.0, ql = 0.0;
    for (const auto& ld : model.loads) {
      if (ld.bus == g.bus && ld.model == model::LoadModel::constant_power) {
        pl += ld.p;
        ql += ld.q;
      }
    }
    sol.generators.push_back({g.bus, s(k).real() * model.s_system + pl, s(k).imag() * model.s_system + ql});
  }
  return sol;
}

}  // namespace cvsc::network
