#include "cvsc/smallsignal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>

namespace cvsc::smallsignal {

StateSpaceModel StateSpaceModel::restrict_to(const std::vector<int>& idx) const {
  StateSpaceModel out;
  const int m = static_cast<int>(idx.size());
  out.a.resize(m, m);
  out.x_eq.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) out.a(i, j) = a(idx[i], idx[j]);
    out.x_eq(i) = x_eq(idx[i]);
    out.labels.push_back(labels[idx[i]]);
    out.core.push_back(core[idx[i]]);
  }
  return out;
}

StateSpaceModel StateSpaceModel::restrict_to_core() const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i) {
    if (core[i]) idx.push_back(i);
  }
  return restrict_to(idx);
}

Eigen::MatrixXd finite_difference_jacobian(const dynamics::Rhs& f, const Eigen::VectorXd& x,
                                           const std::vector<std::string>& labels) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd xp = x;
  Eigen::MatrixXd j;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x(k)));
    xp(k) = x(k) + h;
    const Eigen::VectorXd fp = f(xp);
    xp(k) = x(k) - h;
    const Eigen::VectorXd fm = f(xp);
    xp(k) = x(k);
    if (k == 0) j.resize(fp.size(), n);
    j.col(k) = (fp - fm) / (2.0 * h);
    if (!j.col(k).allFinite()) {
      const std::string name = k < static_cast<Eigen::Index>(labels.size()) ? labels[k] : std::to_string(k);
      throw LinearizationError("non-finite derivative when perturbing state " + name, name);
    }
  }
  return j;
}

StateSpaceModel finite_difference_jacobian(const dynamics::DynamicModel& model, const Eigen::VectorXd& x_eq) {
  const auto& layout = model.system().layout();
  StateSpaceModel ss;
  ss.labels = layout.labels;
  ss.core = layout.core;
  ss.x_eq = x_eq;
  ss.a = finite_difference_jacobian([&](const Eigen::VectorXd& z) { return model.derivative(z); }, x_eq,
                                    layout.labels);
  return ss;
}

std::vector<Mode> compute_modes(const StateSpaceModel& ss, bool* reliable) {
  const EigenDecomposition ed = eig_nonsymmetric(ss.a);
  const Participation pf = participation_factors(ed.right, ed.left);
  if (reliable) *reliable = ed.reliable && pf.reliable;
  std::vector<Mode> modes;
  for (Eigen::Index k = 0; k < ed.values.size(); ++k) {
    Mode m;
    m.eigenvalue = ed.values(k);
    const double mag = std::abs(m.eigenvalue);
    m.frequency = std::abs(m.eigenvalue.imag()) / (2.0 * std::numbers::pi);
    m.damping = mag > 0.0 ? -m.eigenvalue.real() / mag : 0.0;
    m.dominant = pf.dominant[k];
    m.dominant_state = ss.labels.empty() ? std::to_string(m.dominant) : ss.labels[m.dominant];
    m.extension = !ss.core.empty() && !ss.core[m.dominant];
    m.participation = pf.factors.col(k);
    modes.push_back(std::move(m));
  }
  return modes;
}

ModeReport build_mode_report(const std::vector<Mode>& modes, const std::vector<std::string>& labels) {
  std::vector<const Mode*> kept;
  for (const auto& m : modes) {
    if (m.eigenvalue.imag() >= 0.0) kept.push_back(&m);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Mode* a, const Mode* b) {
    const double ia = std::abs(a->eigenvalue.imag()), ib = std::abs(b->eigenvalue.imag());
    if (ia != ib) return ia > ib;
    return a->eigenvalue.real() < b->eigenvalue.real();
  });
  ModeReport rep;
  int next = 1;
  for (const Mode* m : kept) {
    ModeRow row;
    const bool pair = m->eigenvalue.imag() > 0.0;
    row.multiplicity = pair ? 2 : 1;
    row.index = pair ? std::to_string(next) + "," + std::to_string(next + 1) : std::to_string(next);
    next += row.multiplicity;
    row.eigenvalue = m->eigenvalue;
    if (pair) {
      row.frequency = m->frequency;
      row.damping = m->damping;
    }
    row.dominant_state = m->dominant_state;
    row.extension = m->extension;
    std::vector<int> order(m->participation.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return m->participation(a) > m->participation(b); });
    std::string top;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, order.size()); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.4f", m->participation(order[i]));
      const std::string name =
          order[i] < static_cast<int>(labels.size()) ? labels[order[i]] : std::to_string(order[i]);
      if (!top.empty()) top += ";";
      top += name + ":" + buf;
    }
    row.participation_top3 = top;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> w;
  if (points <= 1) return {lo};
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < points; ++i) w.push_back(std::pow(10.0, a + (b - a) * i / (points - 1)));
  return w;
}

namespace {

KaCurve sweep_one(const dynamics::SimSystem& base, double ka, const std::vector<double>& omega, int unit) {
  KaCurve curve;
  curve.k_a = ka;
  try {
    std::vector<dynamics::WpgUnit> units = base.units();
    for (auto& u : units) {
      u.params.K_a = ka;
      u.gains.k_a = ka;
    }
    const dynamics::SimSystem sys(base.network(), units);
    const auto pf = sys.solve_powerflow();
    const auto eq = dynamics::trim_equilibrium(sys, pf);
    const StateSpaceModel ss = finite_difference_jacobian(eq.model, eq.x);
    const Eigen::Index n = ss.n();
    const auto& u = sys.units().at(unit);

    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(unit * dynamics::kUnitStates + 9) = ka / u.gains.v_dc_nom;

    const double p_n = u.params.P_n;
    auto pe = [&](const Eigen::VectorXd& z) {
      Eigen::VectorXd out(1);
      out(0) = eq.model.evaluate(z).units[unit].p_e / p_n;
      return out;
    };
    const Eigen::MatrixXd c = finite_difference_jacobian(pe, eq.x);

    const Eigen::MatrixXcd a = ss.a.cast<complex>();
    for (double w : omega) {
      Eigen::MatrixXcd m = -a;
      m.diagonal().array() += complex(0.0, w);
      const Eigen::VectorXcd g = m.partialPivLu().solve(b.cast<complex>());
      curve.magnitude.push_back(std::abs((c.cast<complex>() * g)(0)));
    }
  } catch (const Error& e) {
    curve.ok = false;
    curve.magnitude.assign(omega.size(), std::nan(""));
    curve.warning = "K_a = " + std::to_string(ka) + " skipped: " + e.what();
  }
  return curve;
}

}  // namespace

KaSweepResult ka_sweep(const dynamics::SimSystem& system, const std::vector<double>& ka_values,
                       const KaSweepOptions& options) {
  if (options.unit < 0 || options.unit >= system.unit_count()) throw ReferenceError("sweep unit out of range");
  KaSweepResult out;
  out.omega = log_grid(0.1, 1000.0, options.points);
  out.curves.resize(ka_values.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(ka_values.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < ka_values.size(); ++i) {
      out.curves[i] = sweep_one(system, ka_values[i], out.omega, options.unit);
    }
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < ka_values.size(); i += workers) {
        out.curves[i] = sweep_one(system, ka_values[i], out.omega, options.unit);
      }
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace cvsc::smallsignal
