#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cvsc/dynamics.hpp"

namespace cvsc::dynamics {

void validate(const Scenario& sc) {
  std::vector<std::string> problems;
  if (!(sc.dt > 0.0)) problems.emplace_back("scenario: dt must be positive");
  if (!(sc.t_end > 0.0)) problems.emplace_back("scenario: t_end must be positive");
  for (std::size_t i = 0; i < sc.events.size(); ++i) {
    const auto& e = sc.events[i];
    const std::string label = "event " + std::to_string(i + 1);
    if (!(e.time >= 0.0) || !(e.time < sc.t_end)) problems.push_back(label + ": time must lie in [0, t_end)");
    if (i > 0 && e.time < sc.events[i - 1].time) problems.push_back(label + ": events are not time-sorted");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

int TimeSeries::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

bool TimeSeries::has_channel(std::string_view name) const { return channel_index(name) >= 0; }

const std::vector<double>& TimeSeries::channel(std::string_view name) const {
  const int k = channel_index(name);
  if (k < 0) throw ReferenceError("unknown channel '" + std::string(name) + "'");
  return data[k];
}

namespace {

class Recorder {
 public:
  Recorder(const SimSystem& sys, const Scenario& sc, bool waveforms) : sys_(sys), waveforms_(waveforms) {
    static const char* per_unit[] = {"v_dc", "p_e", "q_e", "p_in", "p_storage", "v_t",
                                     "delta_theta", "omega_r", "omega_t", "m", "beta", "e_exchange"};
    for (const auto& u : sys.units()) {
      for (const char* c : per_unit) all_.push_back(std::string(c) + "." + u.name);
    }
    for (const auto& b : sys.network().buses) all_.push_back("v_bus." + std::to_string(b.id));
    all_.emplace_back("v_fault");
    all_.emplace_back("p_load");
    all_.emplace_back("p_loss");
    if (waveforms_) {
      for (const char* ph : {"va_bus.", "vb_bus.", "vc_bus."}) {
        for (const auto& b : sys.network().buses) all_.push_back(ph + std::to_string(b.id));
      }
    }
    for (std::size_t i = 0; i < all_.size(); ++i) {
      const bool keep = sc.outputs.empty() ||
                        std::find(sc.outputs.begin(), sc.outputs.end(), all_[i]) != sc.outputs.end();
      if (keep) {
        selected_.push_back(static_cast<int>(i));
        ts.names.push_back(all_[i]);
      }
    }
    for (const auto& o : sc.outputs) {
      if (std::find(all_.begin(), all_.end(), o) == all_.end()) {
        throw ReferenceError("unknown output channel '" + o + "'");
      }
    }
    ts.data.resize(selected_.size());
    row_.resize(all_.size());
    exchange_.assign(sys.unit_count(), 0.0);
  }

  // Trapezoidal integral of p_me - p_e over one accepted integrator step,
  // with the powers taken from the unit outputs.
  void accumulate(const DynamicModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& x1, double h) {
    if (cached_x_.size() != x0.size() || cached_x_ != x0) net_power(model, x0, cached_p_);
    std::vector<double> p1;
    net_power(model, x1, p1);
    for (std::size_t i = 0; i < exchange_.size(); ++i) exchange_[i] += 0.5 * h * (cached_p_[i] + p1[i]);
    cached_x_ = x1;
    cached_p_ = std::move(p1);
  }

  void invalidate() { cached_x_.resize(0); }

  void record(double t, const DynamicModel& model, const Eigen::VectorXd& x) {
    const Evaluation ev = model.evaluate(x);
    const auto& net = sys_.network();
    std::size_t k = 0;
    for (int i = 0; i < sys_.unit_count(); ++i) {
      const double* xi = x.data() + i * kUnitStates;
      const auto& o = ev.units[i];
      const double vals[] = {xi[8],  o.p_e,  o.q_e,  o.p_in,  o.p_storage, o.v_t,
                             xi[9],  xi[5],  xi[6],  xi[10], o.beta,      exchange_[i]};
      for (double v : vals) row_[k++] = v;
    }
    const int nb = static_cast<int>(net.buses.size());
    for (int b = 0; b < nb; ++b) row_[k++] = std::abs(ev.net.v(b));
    row_[k++] = fault_voltage(model.admittance(), ev.net);
    row_[k++] = network::shunt_power(model.admittance(), ev.net) * net.s_system;
    row_[k++] = network::network_loss(model.admittance(), model.solver().sources(), ev.net) * net.s_system;
    if (waveforms_) {
      const double w = 2.0 * std::numbers::pi * net.f_n * t;
      for (double shift : {0.0, -2.0 * std::numbers::pi / 3.0, 2.0 * std::numbers::pi / 3.0}) {
        for (int b = 0; b < nb; ++b) {
          row_[k++] = std::sqrt(2.0) * std::abs(ev.net.v(b)) * std::cos(w + std::arg(ev.net.v(b)) + shift);
        }
      }
    }
    ts.time.push_back(t);
    for (std::size_t c = 0; c < selected_.size(); ++c) ts.data[c].push_back(row_[selected_[c]]);
  }

  TimeSeries ts;

 private:
  static void net_power(const DynamicModel& model, const Eigen::VectorXd& x, std::vector<double>& out) {
    const Evaluation ev = model.evaluate(x);
    out.resize(ev.units.size());
    for (std::size_t i = 0; i < ev.units.size(); ++i) {
      out[i] = ev.units[i].p_in + ev.units[i].p_storage - ev.units[i].p_e;
    }
  }

  // Largest |V| over faulted points, NaN when no fault is applied.
  static double fault_voltage(const network::AdmittanceMatrix& y, const network::NetworkSolution& net) {
    if (!y.has_topology() || y.topology().faults.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto& ids = y.node_ids();
    double worst = 0.0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] >= network::AdmittanceMatrix::fault_node_base) worst = std::max(worst, std::abs(net.v(k)));
    }
    for (const auto& f : y.topology().faults) {
      if (f.branch.empty()) worst = std::max(worst, std::abs(net.v(y.node_index(f.bus))));
    }
    return worst;
  }

  SimSystem sys_;
  bool waveforms_;
  std::vector<std::string> all_;
  std::vector<int> selected_;
  std::vector<double> row_;
  std::vector<double> exchange_;
  Eigen::VectorXd cached_x_;
  std::vector<double> cached_p_;
};

}  // namespace

TimeSeries run_scenario(const DynamicModel& initial, const Scenario& sc, const Eigen::VectorXd& x0,
                        const RunOptions& options) {
  validate(sc);
  DynamicModel model = initial;
  Recorder rec(model.system(), sc, options.waveforms);

  IntegratorOptions iopt = options.integrator;
  if (iopt.scale.size() == 0) iopt.scale = model.system().state_scale();
  auto rhs = [&model](const Eigen::VectorXd& z) { return model.derivative(z); };
  TrapezoidalIntegrator integ(rhs, iopt);
  integ.set_observer([&rec, &model](const Eigen::VectorXd& a, const Eigen::VectorXd&, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd&, double h) { rec.accumulate(model, a, b, h); });

  Eigen::VectorXd x = x0;
  double t = 0.0;
  std::size_t next_event = 0;
  const double eps = 1e-9 * sc.dt;

  auto apply_events_at = [&](double now) {
    bool changed = false;
    while (next_event < sc.events.size() && std::abs(sc.events[next_event].time - now) <= eps) {
      const auto y = network::apply_event(model.admittance(), sc.events[next_event], model.system().network().s_system);
      model = model.with_admittance(y);
      ++next_event;
      changed = true;
    }
    if (changed) {
      integ.reset(rhs);
      rec.invalidate();
      rec.record(now, model, x);
    }
  };

  try {
    rec.record(t, model, x);
    apply_events_at(t);
    while (t < sc.t_end - eps) {
      const double k = std::floor(t / sc.dt + 1e-6) + 1.0;
      double t_next = std::min(k * sc.dt, sc.t_end);
      if (next_event < sc.events.size()) t_next = std::min(t_next, sc.events[next_event].time);
      if (t_next - t <= eps) {
        t = t_next;
        apply_events_at(t);
        continue;
      }
      x = integ.step(x, t_next - t);
      model.project(x);
      t = t_next;
      rec.record(t, model, x);
      apply_events_at(t);
    }
  } catch (const Error& e) {
    throw ScenarioError(std::string("integration failed at t = ") + std::to_string(t) + " s: " + e.what(), t,
                        std::move(rec.ts));
  }
  return std::move(rec.ts);
}

ScenarioSummary summarize(const SimSystem& sys, const Scenario& sc, const TimeSeries& ts) {
  ScenarioSummary out;
  const std::size_t n = ts.samples();
  if (n == 0) return out;
  out.last_event_time = sc.events.empty() ? 0.0 : sc.events.back().time;

  std::vector<double> dv_final;
  double pe0 = 0.0, pe1 = 0.0;
  for (const auto& u : sys.units()) {
    UnitSummary s;
    s.name = u.name;
    const auto& v = ts.channel("v_dc." + u.name);
    const auto& pe = ts.channel("p_e." + u.name);
    const auto& pin = ts.channel("p_in." + u.name);
    const auto& ps = ts.channel("p_storage." + u.name);
    s.v_dc_initial = v.front();
    s.v_dc_final = v.back();
    s.v_dc_peak = *std::max_element(v.begin(), v.end());
    s.v_dc_min = *std::min_element(v.begin(), v.end());
    s.p_e_initial = pe.front();
    s.p_e_final = pe.back();
    s.p_e_min = *std::min_element(pe.begin(), pe.end());
    s.p_e_max = *std::max_element(pe.begin(), pe.end());
    for (double p : pe) s.p_e_swing = std::max(s.p_e_swing, std::abs(p - s.p_e_initial));

    const double band = 1e-3 * u.params.V_dc_nom;
    double last_out = out.last_event_time;
    for (std::size_t k = 0; k < n; ++k) {
      if (ts.time[k] >= out.last_event_time && std::abs(v[k] - s.v_dc_final) > band) last_out = ts.time[k];
    }
    s.settling_time = last_out - out.last_event_time;

    const double c = u.params.C;
    const std::string exchange = "e_exchange." + u.name;
    const std::vector<double>* ex = ts.has_channel(exchange) ? &ts.channel(exchange) : nullptr;
    double integral = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (ex) {
        integral = (*ex)[k];
      } else if (k > 0) {
        const double a = pin[k - 1] + ps[k - 1] - pe[k - 1];
        const double b = pin[k] + ps[k] - pe[k];
        integral += 0.5 * (ts.time[k] - ts.time[k - 1]) * (a + b);
      }
      const double stored = controller::capacitor_energy(v[k], v.front(), c);
      s.energy_residual = std::max(s.energy_residual, std::abs(stored - integral));
      s.energy_peak = std::max(s.energy_peak, std::abs(stored));
    }
    const double floor = 1e-12 * 0.5 * c * v.front() * v.front();
    s.energy_ratio = s.energy_residual / std::max(s.energy_peak, floor);

    dv_final.push_back(controller::delta_vdc_star(v.back(), u.gains.v_dc_nom));
    pe0 += pe.front();
    pe1 += pe.back();
    out.units.push_back(s);
  }
  for (std::size_t i = 0; i < dv_final.size(); ++i) {
    for (std::size_t j = i + 1; j < dv_final.size(); ++j) {
      out.sync_residual = std::max(out.sync_residual, std::abs(dv_final[i] - dv_final[j]));
    }
  }
  out.delta_p_e_total = pe1 - pe0;
  const auto& pl = ts.channel("p_load");
  const auto& pls = ts.channel("p_loss");
  out.delta_p_load = pl.back() - pl.front();
  out.delta_p_loss = pls.back() - pls.front();
  return out;
}

}  // namespace cvsc::dynamics
