#include <benchmark/benchmark.h>

#include <vector>

#include "thermnet/circuit/circuit.hpp"
#include "thermnet/dynamics/density_matrix.hpp"
#include "thermnet/dynamics/liouvillian.hpp"
#include "thermnet/dynamics/operators.hpp"
#include "thermnet/dynamics/steady_state.hpp"
#include "thermnet/protocols/protocols.hpp"

using namespace thermnet;

namespace {

constexpr double kWc = units::ghz(7.48);

dynamics::OpenSystem coupled_system(int cutoff, int qubits) {
  std::vector<dynamics::QubitParams> qs;
  for (int i = 0; i < qubits; ++i) {
    dynamics::QubitParams q;
    q.frequency = kWc;
    q.anharmonicity = units::mhz(-204.0);
    q.levels = 3;
    q.relaxation = 1.0 / 1.08e-6;
    q.occupancy = 0.52;
    qs.push_back(q);
  }
  const dynamics::ModeParams mode{kWc, cutoff, 1.0 / 820e-9, 5.64};
  const std::vector<double> g(qubits, units::mhz(5.0));
  return dynamics::build_open_system(qs, mode, g, kWc);
}

void BM_LiouvillianApply(benchmark::State& state) {
  const auto sys = coupled_system(static_cast<int>(state.range(0)), 2);
  const dynamics::Liouvillian l(sys.hamiltonian, sys.collapse_ops, sys.space.charges(), {0, 1});
  const auto rho = dynamics::kron(dynamics::thermal_state(9, 0.1),
                                  dynamics::thermal_state(static_cast<int>(state.range(0)), 1.0));
  const auto in = l.pack(rho);
  auto out = in;
  for (auto _ : state) {
    l.apply(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["elements"] = static_cast<double>(l.element_count());
}
BENCHMARK(BM_LiouvillianApply)->Arg(6)->Arg(12)->Arg(24);

void BM_SteadyStateCoupled(benchmark::State& state) {
  const auto sys = coupled_system(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    auto ss = dynamics::steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges());
    benchmark::DoNotOptimize(ss.rho.data());
  }
}
BENCHMARK(BM_SteadyStateCoupled)->Arg(12)->Arg(24)->Arg(43)->Unit(benchmark::kMillisecond);

void BM_ImpedanceScan(benchmark::State& state) {
  const auto net = circuit::CircuitNetwork::reference();
  const circuit::FluxBias flux(-0.33);
  for (auto _ : state) {
    auto modes = circuit::find_modes(net, flux, units::ghz(4.0), units::ghz(8.0));
    benchmark::DoNotOptimize(modes.data());
  }
}
BENCHMARK(BM_ImpedanceScan)->Unit(benchmark::kMillisecond);

void BM_OffPointSearch(benchmark::State& state) {
  const auto net = circuit::CircuitNetwork::reference();
  for (auto _ : state) {
    auto off = circuit::find_off_point(net, kWc);
    benchmark::DoNotOptimize(off);
  }
}
BENCHMARK(BM_OffPointSearch)->Unit(benchmark::kMillisecond);

void BM_CoolingRun(benchmark::State& state) {
  const auto model = protocols::reference_model(4.0);
  protocols::RunOptions ro;
  ro.sample_interval = 10e-9;
  for (auto _ : state) {
    auto r = protocols::cooling_protocol(model, 200e-9, ro);
    benchmark::DoNotOptimize(r.final_state.data());
  }
}
BENCHMARK(BM_CoolingRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
