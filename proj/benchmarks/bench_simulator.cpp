#include <benchmark/benchmark.h>

#include "qcoop/simulator.hpp"

namespace {

qcoop::SimConfig reference(std::uint64_t horizon) {
    using qcoop::Matrix;
    using qcoop::Vector;
    qcoop::SimConfig cfg;
    cfg.plant = {Matrix{{1.0, 0.1}, {0.0, 0.5}}, Matrix{{1.0}, {1.0}}, Matrix{{1.0, 0.0}}};
    cfg.net = qcoop::Network::build(4, {{0, 1, 1.0}, {1, 0, 1.0}, {0, 2, 1.0}, {1, 3, 1.0}});
    cfg.law = qcoop::ConsensusLaw{Matrix{{0.2, 0.0}}};
    cfg.comm.gamma = 0.95;
    cfg.comm.levels_y = cfg.comm.levels_u = 20;
    cfg.comm.observer_gain = Matrix{{0.5}, {0.0}};
    cfg.horizon = horizon;
    cfg.initial_states = {Vector{{1.0, 4.0}}, Vector{{2.5, 0.5}}, Vector{{4.0, 3.0}}, Vector{{0.2, 2.2}}};
    cfg.initial_estimates.assign(4, Vector::Zero(2));
    cfg.initial_control_estimates.assign(4, Vector::Zero(1));
    return cfg;
}

void BM_SimulatePrimitive(benchmark::State& state) {
    const auto cfg = reference(static_cast<std::uint64_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(qcoop::simulate_primitive(cfg));
}
BENCHMARK(BM_SimulatePrimitive)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_SimulateCoupled(benchmark::State& state) {
    const auto cfg = reference(static_cast<std::uint64_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(qcoop::simulate_coupled(cfg));
}
BENCHMARK(BM_SimulateCoupled)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
