#include <benchmark/benchmark.h>

#include "qcoop/numerics.hpp"

namespace {

void BM_Eigenvalues(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    qcoop::Matrix m = qcoop::Matrix::Random(n, n);
    for (auto _ : state) benchmark::DoNotOptimize(qcoop::numerics::eigenvalues(m));
}
BENCHMARK(BM_Eigenvalues)->Arg(4)->Arg(16)->Arg(64);

void BM_Kron(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const qcoop::Matrix a = qcoop::Matrix::Random(n, n), b = qcoop::Matrix::Random(3, 3);
    for (auto _ : state) benchmark::DoNotOptimize(qcoop::numerics::kron(a, b));
}
BENCHMARK(BM_Kron)->Arg(4)->Arg(16);

void BM_GuoBound(benchmark::State& state) {
    const qcoop::Matrix m = 0.4 * qcoop::Matrix::Random(6, 6);
    for (auto _ : state) benchmark::DoNotOptimize(qcoop::numerics::guo_power_bound(m, 0.1));
}
BENCHMARK(BM_GuoBound);

}  // namespace

BENCHMARK_MAIN();
