#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvsc/model.hpp"

namespace cvsc::network {

using complex = std::complex<double>;

// Shunt element attached to a bus, in system per unit.
struct Shunt {
  int bus = 0;
  complex y;
};

// A fault shunt either on a bus (branch empty) or part-way along a branch,
// in which case the branch is split and an internal node is created.
struct Fault {
  std::string branch;
  int bus = 0;
  double location = 0.5;
  complex y{1e6, 0.0};
};

// Everything the admittance matrix is assembled from. Assembly always
// restamps from this description in a fixed order, so undoing an event
// reproduces the original matrix exactly.
struct Topology {
  std::vector<model::Bus> buses;
  std::vector<model::Branch> branches;
  std::vector<Shunt> shunts;
  std::vector<Fault> faults;
};

class AdmittanceMatrix {
 public:
  AdmittanceMatrix() = default;
  // Bare matrix with no topology (e.g. the result of a Kron reduction).
  AdmittanceMatrix(std::vector<int> node_ids, Eigen::MatrixXcd y);

  static AdmittanceMatrix assemble(Topology topology);

  int n() const { return static_cast<int>(y_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return y_; }
  complex operator()(int i, int j) const { return y_(i, j); }
  // Bus ids first, then fault-internal nodes numbered from fault_node_base.
  const std::vector<int>& node_ids() const { return node_ids_; }
  int node_index(int id) const;
  bool has_topology() const { return topology_ != nullptr; }
  const Topology& topology() const;

  static constexpr int fault_node_base = 1000000;

 private:
  std::vector<int> node_ids_;
  Eigen::MatrixXcd y_;
  std::shared_ptr<const Topology> topology_;
};

// Series branches, line charging, taps, and constant-impedance loads.
AdmittanceMatrix build_ybus(const model::NetworkModel& model);

// Adds constant-power loads as shunts evaluated at the given bus voltages.
AdmittanceMatrix fold_loads(const AdmittanceMatrix& y, const model::NetworkModel& model,
                            const Eigen::VectorXcd& bus_voltages);

AdmittanceMatrix kron_reduce(const AdmittanceMatrix& y, const std::vector<int>& keep_ids);

enum class EventKind { load_step, fault, clear, reclose };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view text);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::load_step;
  std::string branch;
  int bus = 0;
  double p = 0.0;  // W, load step
  double q = 0.0;  // var, load step
  double location = 0.5;
  double y_fault = 1e6;
};

AdmittanceMatrix apply_event(const AdmittanceMatrix& y, const Event& event, double s_system);

// Inverter behind its output filter, attached to a bus.
struct Source {
  int bus = 0;
  complex z_filter;  // system pu
};

struct SourceOutput {
  double p = 0.0;  // system pu, at the inverter node
  double q = 0.0;
  complex v_t;     // PCCB voltage
  complex i;       // filter current into the PCCB
};

struct NetworkSolution {
  Eigen::VectorXcd v;
  std::vector<SourceOutput> sources;
};

// Factorization of the network augmented with source filters. Immutable.
class NetworkSolver {
 public:
  NetworkSolver(const AdmittanceMatrix& y, std::vector<Source> sources);

  NetworkSolution solve(const std::vector<complex>& e) const;
  const AdmittanceMatrix& admittance() const { return y_; }
  const std::vector<Source>& sources() const { return sources_; }

 private:
  AdmittanceMatrix y_;
  std::vector<Source> sources_;
  std::vector<int> source_nodes_;
  std::vector<complex> filter_y_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

NetworkSolution network_algebraic_solve(const AdmittanceMatrix& y, const std::vector<Source>& sources,
                                        const std::vector<complex>& e);

// Series I^2 R losses in branches plus filter losses, system pu.
double network_loss(const AdmittanceMatrix& y, const std::vector<Source>& sources,
                    const NetworkSolution& solution);

// Active power drawn by all bus shunts (loads, faults), system pu.
double shunt_power(const AdmittanceMatrix& y, const NetworkSolution& solution);

struct GeneratorDispatch {
  int bus = 0;
  double p = 0.0;  // W
  double v = 1.0;  // pu
};

struct GeneratorResult {
  int bus = 0;
  double p = 0.0;  // W
  double q = 0.0;  // var
};

struct PowerFlowOptions {
  double tolerance = 1e-8;
  int max_iterations = 30;
};

struct PowerFlowSolution {
  std::vector<int> bus_ids;
  Eigen::VectorXcd v;
  std::vector<GeneratorResult> generators;
  double mismatch = 0.0;
  int iterations = 0;
  int slack_bus = 0;

  complex voltage(int bus_id) const;
  const GeneratorResult& generator(int bus_id) const;
};

PowerFlowSolution solve_powerflow(const model::NetworkModel& model,
                                  const std::vector<GeneratorDispatch>& dispatch, int slack_bus,
                                  const PowerFlowOptions& options = {});

}  // namespace cvsc::network
