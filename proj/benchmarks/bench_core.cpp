#include "aada/dann.hpp"
#include "aada/sampling.hpp"

#include <benchmark/benchmark.h>

using namespace aada;

namespace {

Matrix noise(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (double& v : m.values()) v = rng.normal();
    return m;
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = noise(n, n, 1), b = noise(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_AdversarialStep(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    Rng init(3);
    DannModel m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    LabeledBatch l{noise(batch, 2, 4), std::vector<Label>(batch, 1), std::vector<int>(batch, 1)};
    const auto u = UnlabeledBatch::target(noise(batch, 2, 5));
    for (auto _ : state) benchmark::DoNotOptimize(adversarial_step(m, l, u));
}
BENCHMARK(BM_AdversarialStep)->Arg(64)->Arg(128);

void BM_ImportanceSelect(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng init(6);
    const DannModel m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    const auto in = make_selection_inputs(m, noise(n, 2, 7), Matrix(0, 2));
    for (auto _ : state) benchmark::DoNotOptimize(select(Strategy::ImportanceWeight, in, 10, 1));
}
BENCHMARK(BM_ImportanceSelect)->Arg(1000)->Arg(10000);

void BM_KCenter(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix u = noise(n, 32, 8), l = noise(50, 32, 9);
    for (auto _ : state) benchmark::DoNotOptimize(kcenter_select(u, l, 10));
}
BENCHMARK(BM_KCenter)->Arg(1000)->Arg(5000);

void BM_KMeans(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix u = noise(n, 32, 10);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans_select(u, 10, 1));
}
BENCHMARK(BM_KMeans)->Arg(1000);

} // namespace

BENCHMARK_MAIN();
