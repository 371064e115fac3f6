#include <random>

#include <benchmark/benchmark.h>

#include "cvsc/cli/config.hpp"
#include "cvsc/smallsignal.hpp"

using namespace cvsc;

namespace {

cli::SystemConfig benchmark_config() {
  return cli::parse_system_config(cli::read_file(std::string(CVSC_DATA_DIR) + "/benchmark.system"));
}

const dynamics::Equilibrium& equilibrium() {
  static const dynamics::Equilibrium eq = [] {
    const auto sys = benchmark_config().to_system();
    return dynamics::trim_equilibrium(sys, sys.solve_powerflow());
  }();
  return eq;
}

void BM_PowerFlow(benchmark::State& state) {
  const auto sys = benchmark_config().to_system();
  for (auto _ : state) benchmark::DoNotOptimize(sys.solve_powerflow());
}
BENCHMARK(BM_PowerFlow);

void BM_Trim(benchmark::State& state) {
  const auto sys = benchmark_config().to_system();
  const auto pf = sys.solve_powerflow();
  for (auto _ : state) benchmark::DoNotOptimize(dynamics::trim_equilibrium(sys, pf));
}
BENCHMARK(BM_Trim)->Unit(benchmark::kMillisecond);

void BM_Derivative(benchmark::State& state) {
  const auto& eq = equilibrium();
  for (auto _ : state) benchmark::DoNotOptimize(eq.model.derivative(eq.x));
}
BENCHMARK(BM_Derivative);

void BM_Jacobian(benchmark::State& state) {
  const auto& eq = equilibrium();
  for (auto _ : state) benchmark::DoNotOptimize(smallsignal::finite_difference_jacobian(eq.model, eq.x));
}
BENCHMARK(BM_Jacobian)->Unit(benchmark::kMillisecond);

void BM_Eigen(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  for (auto _ : state) benchmark::DoNotOptimize(smallsignal::eig_nonsymmetric(a));
}
BENCHMARK(BM_Eigen)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SimulationStep(benchmark::State& state) {
  const auto& eq = equilibrium();
  dynamics::TrapezoidalIntegrator integ([&](const Eigen::VectorXd& x) { return eq.model.derivative(x); });
  Eigen::VectorXd x = eq.x;
  for (auto _ : state) {
    x = integ.step(x, 1e-3);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_SimulationStep);

}  // namespace
BENCHMARK_MAIN();
