#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "qcoop/quantizer.hpp"

namespace {

void BM_QuantizeScalar(benchmark::State& state) {
    const qcoop::QuantizerSpec spec{1.0, state.range(0)};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-1.5 * static_cast<double>(spec.levels),
                                                1.5 * static_cast<double>(spec.levels));
    std::vector<double> inputs(4096);
    for (double& y : inputs) y = dist(rng);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(qcoop::quantize(spec, inputs[i++ & 4095]));
    }
}
BENCHMARK(BM_QuantizeScalar)->Arg(20)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
