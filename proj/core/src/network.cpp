#include "cvsc/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "cvsc/error.hpp"

namespace cvsc::network {

namespace {

struct Segment {
  int from;  // node index
  int to;
  complex y_series;
  double b_half;
  double tap;
  double r;
};

// Expands in-service branches into series segments, splitting faulted ones.
// Returns the number of internal nodes created.
int expand_segments(const Topology& t, const std::vector<int>& ids, std::vector<Segment>& out,
                    std::vector<std::pair<int, complex>>& fault_shunts) {
  auto index_of = [&](int id) {
    auto it = std::find(ids.begin(), ids.end(), id);
    return static_cast<int>(it - ids.begin());
  };
  int next = static_cast<int>(t.buses.size());
  for (const auto& br : t.branches) {
    if (!br.in_service) continue;
    const int f = index_of(br.from);
    const int to = index_of(br.to);
    const Fault* fault = nullptr;
    for (const auto& fl : t.faults) {
      if (!fl.branch.empty() && fl.branch == br.name) fault = &fl;
    }
    if (!fault) {
      out.push_back({f, to, 1.0 / complex(br.r, br.x), br.b_shunt / 2.0, br.tap, br.r});
      continue;
    }
    const double a = fault->location;
    const double b = 1.0 - a;
    const int mid = next++;
    out.push_back({f, mid, 1.0 / complex(br.r * a, br.x * a), br.b_shunt * a / 2.0, br.tap, br.r * a});
    out.push_back({mid, to, 1.0 / complex(br.r * b, br.x * b), br.b_shunt * b / 2.0, 1.0, br.r * b});
    fault_shunts.emplace_back(mid, fault->y);
  }
  for (const auto& fl : t.faults) {
    if (fl.branch.empty()) fault_shunts.emplace_back(index_of(fl.bus), fl.y);
  }
  return next - static_cast<int>(t.buses.size());
}

void check_connected(const std::vector<Segment>& segs, int n) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& s : segs) {
    adj[s.from].push_back(s.to);
    adj[s.to].push_back(s.from);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int k = q.front();
    q.pop();
    for (int j : adj[k]) {
      if (!seen[j]) {
        seen[j] = true;
        ++count;
        q.push(j);
      }
    }
  }
  if (count != n) throw TopologyError("network graph is disconnected");
}

}  // namespace

AdmittanceMatrix::AdmittanceMatrix(std::vector<int> node_ids, Eigen::MatrixXcd y)
    : node_ids_(std::move(node_ids)), y_(std::move(y)) {
  if (y_.rows() != y_.cols() || static_cast<std::size_t>(y_.rows()) != node_ids_.size()) {
    throw Error("admittance matrix shape does not match node list");
  }
}

int AdmittanceMatrix::node_index(int id) const {
  auto it = std::find(node_ids_.begin(), node_ids_.end(), id);
  if (it == node_ids_.end()) throw ReferenceError("unknown bus " + std::to_string(id));
  return static_cast<int>(it - node_ids_.begin());
}

const Topology& AdmittanceMatrix::topology() const {
  if (!topology_) throw ReferenceError("admittance matrix carries no topology");
  return *topology_;
}

AdmittanceMatrix AdmittanceMatrix::assemble(Topology t) {
  if (t.buses.empty()) throw TopologyError("network has no buses");
  std::vector<int> ids;
  ids.reserve(t.buses.size());
  for (const auto& b : t.buses) ids.push_back(b.id);

  std::vector<Segment> segs;
  std::vector<std::pair<int, complex>> fault_shunts;
  const int internal = expand_segments(t, ids, segs, fault_shunts);
  for (int k = 0; k < internal; ++k) ids.push_back(fault_node_base + k);
  const int n = static_cast<int>(ids.size());
  check_connected(segs, n);

  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& s : segs) {
    const complex jb(0.0, s.b_half);
    y(s.from, s.from) += s.y_series / (s.tap * s.tap) + jb;
    y(s.to, s.to) += s.y_series + jb;
    y(s.from, s.to) -= s.y_series / s.tap;
    y(s.to, s.from) -= s.y_series / s.tap;
  }
  for (const auto& sh : t.shunts) {
    const int k = static_cast<int>(std::find(ids.begin(), ids.end(), sh.bus) - ids.begin());
    y(k, k) += sh.y;
  }
  for (const auto& [k, yf] : fault_shunts) y(k, k) += yf;

  AdmittanceMatrix out(std::move(ids), std::move(y));
  out.topology_ = std::make_shared<const Topology>(std::move(t));
  return out;
}

AdmittanceMatrix build_ybus(const model::NetworkModel& model) {
  model::validate(model);
  Topology t;
  t.buses = model.buses;
  t.branches = model.branches;
  for (const auto& ld : model.loads) {
    if (ld.model == model::LoadModel::constant_impedance) {
      t.shunts.push_back({ld.bus, complex(ld.p, -ld.q) / model.s_system});
    }
  }
  return AdmittanceMatrix::assemble(std::move(t));
}

AdmittanceMatrix fold_loads(const AdmittanceMatrix& y, const model::NetworkModel& model,
                            const Eigen::VectorXcd& v) {
  Topology t = y.topology();
  for (const auto& ld : model.loads) {
    if (ld.model != model::LoadModel::constant_power) continue;
    const double vm = std::abs(v(y.node_index(ld.bus)));
    if (!(vm > 0.0)) throw DomainError("cannot fold load at a dead bus " + std::to_string(ld.bus));
    t.shunts.push_back({ld.bus, complex(ld.p, -ld.q) / (model.s_system * vm * vm)});
  }
  return AdmittanceMatrix::assemble(std::move(t));
}

AdmittanceMatrix kron_reduce(const AdmittanceMatrix& y, const std::vector<int>& keep_ids) {
  const int n = y.n();
  std::vector<int> keep;
  std::vector<bool> kept(n, false);
  for (int id : keep_ids) {
    const int k = y.node_index(id);
    if (kept[k]) throw ReferenceError("bus " + std::to_string(id) + " listed twice");
    kept[k] = true;
    keep.push_back(k);
  }
  std::vector<int> elim;
  for (int k = 0; k < n; ++k) {
    if (!kept[k]) elim.push_back(k);
  }
  const int nk = static_cast<int>(keep.size());
  const int ne = static_cast<int>(elim.size());
  const auto& m = y.matrix();
  Eigen::MatrixXcd ykk(nk, nk), yke(nk, ne), yek(ne, nk), yee(ne, ne);
  for (int i = 0; i < nk; ++i) {
    for (int j = 0; j < nk; ++j) ykk(i, j) = m(keep[i], keep[j]);
    for (int j = 0; j < ne; ++j) yke(i, j) = m(keep[i], elim[j]);
  }
  for (int i = 0; i < ne; ++i) {
    for (int j = 0; j < nk; ++j) yek(i, j) = m(elim[i], keep[j]);
    for (int j = 0; j < ne; ++j) yee(i, j) = m(elim[i], elim[j]);
  }
  Eigen::MatrixXcd reduced = ykk;
  if (ne > 0) {
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(yee);
    if (!lu.isInvertible()) throw ReductionError("eliminated block of the admittance matrix is singular");
    reduced -= yke * lu.solve(yek);
  }
  return AdmittanceMatrix(keep_ids, std::move(reduced));
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::load_step: return "load-step";
    case EventKind::fault: return "fault";
    case EventKind::clear: return "clear";
    case EventKind::reclose: return "reclose";
  }
  return "load-step";
}

EventKind event_kind_from_string(std::string_view text) {
  if (text == "load-step" || text == "load_step") return EventKind::load_step;
  if (text == "fault") return EventKind::fault;
  if (text == "clear") return EventKind::clear;
  if (text == "reclose") return EventKind::reclose;
  throw Error("unknown event kind '" + std::string(text) + "'");
}

AdmittanceMatrix apply_event(const AdmittanceMatrix& y, const Event& ev, double s_system) {
  Topology t = y.topology();
  auto bus_exists = [&](int id) {
    return std::any_of(t.buses.begin(), t.buses.end(), [&](const model::Bus& b) { return b.id == id; });
  };
  auto find_branch = [&]() -> model::Branch& {
    for (auto& br : t.branches) {
      if (br.name == ev.branch) return br;
    }
    throw ReferenceError("unknown branch '" + ev.branch + "'");
  };

  switch (ev.kind) {
    case EventKind::load_step:
      if (!bus_exists(ev.bus)) throw ReferenceError("unknown bus " + std::to_string(ev.bus));
      t.shunts.push_back({ev.bus, complex(ev.p, -ev.q) / s_system});
      break;
    case EventKind::fault:
      if (ev.branch.empty()) {
        if (!bus_exists(ev.bus)) throw ReferenceError("unknown bus " + std::to_string(ev.bus));
        t.faults.push_back({"", ev.bus, 0.0, complex(ev.y_fault, 0.0)});
      } else {
        auto& br = find_branch();
        if (!br.in_service) throw ReferenceError("branch '" + ev.branch + "' is out of service");
        if (!(ev.location > 0.0 && ev.location < 1.0)) {
          throw DomainError("fault location must lie strictly inside the branch");
        }
        t.faults.push_back({ev.branch, 0, ev.location, complex(ev.y_fault, 0.0)});
      }
      break;
    case EventKind::clear:
      if (ev.branch.empty()) {
        if (!bus_exists(ev.bus)) throw ReferenceError("unknown bus " + std::to_string(ev.bus));
        std::erase_if(t.faults, [&](const Fault& f) { return f.branch.empty() && f.bus == ev.bus; });
      } else {
        find_branch().in_service = false;
        std::erase_if(t.faults, [&](const Fault& f) { return f.branch == ev.branch; });
      }
      break;
    case EventKind::reclose:
      find_branch().in_service = true;
      break;
  }
  return AdmittanceMatrix::assemble(std::move(t));
}

NetworkSolver::NetworkSolver(const AdmittanceMatrix& y, std::vector<Source> sources)
    : y_(y), sources_(std::move(sources)) {
  Eigen::MatrixXcd aug = y_.matrix();
  for (const auto& s : sources_) {
    if (s.z_filter == complex(0.0, 0.0)) throw SolveError("source filter impedance is zero");
    const int k = y_.node_index(s.bus);
    source_nodes_.push_back(k);
    filter_y_.push_back(1.0 / s.z_filter);
    aug(k, k) += filter_y_.back();
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> check(aug);
  check.setThreshold(1e-13);
  if (!check.isInvertible()) throw SolveError("network admittance matrix is singular");
  lu_.compute(aug);
}

NetworkSolution NetworkSolver::solve(const std::vector<complex>& e) const {
  if (e.size() != sources_.size()) throw SolveError("source count mismatch");
  Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(y_.n());
  for (std::size_t i = 0; i < e.size(); ++i) inj(source_nodes_[i]) += e[i] * filter_y_[i];
  NetworkSolution out;
  out.v = lu_.solve(inj);
  out.sources.resize(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const complex vt = out.v(source_nodes_[i]);
    const complex cur = (e[i] - vt) * filter_y_[i];
    const complex s = e[i] * std::conj(cur);
    out.sources[i] = {s.real(), s.imag(), vt, cur};
  }
  return out;
}

NetworkSolution network_algebraic_solve(const AdmittanceMatrix& y, const std::vector<Source>& sources,
                                        const std::vector<complex>& e) {
  return NetworkSolver(y, sources).solve(e);
}

double network_loss(const AdmittanceMatrix& y, const std::vector<Source>& sources,
                    const NetworkSolution& sol) {
  const Topology& t = y.topology();
  std::vector<Segment> segs;
  std::vector<std::pair<int, complex>> fault_shunts;
  expand_segments(t, y.node_ids(), segs, fault_shunts);
  double loss = 0.0;
  for (const auto& s : segs) {
    const complex cur = (sol.v(s.from) / s.tap - sol.v(s.to)) * s.y_series;
    loss += s.r * std::norm(cur);
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    loss += sources[i].z_filter.real() * std::norm(sol.sources[i].i);
  }
  return loss;
}

double shunt_power(const AdmittanceMatrix& y, const NetworkSolution& sol) {
  const Topology& t = y.topology();
  std::vector<Segment> segs;
  std::vector<std::pair<int, complex>> fault_shunts;
  expand_segments(t, y.node_ids(), segs, fault_shunts);
  double p = 0.0;
  for (const auto& sh : t.shunts) {
    p += sh.y.real() * std::norm(sol.v(y.node_index(sh.bus)));
  }
  for (const auto& [k, yf] : fault_shunts) p += yf.real() * std::norm(sol.v(k));
  return p;
}

}  // namespace cvsc::network
