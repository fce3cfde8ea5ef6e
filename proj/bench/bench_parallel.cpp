// Serial reference vs OpenMP kernels. Arg 0 of the parallel cases is the
// thread count.

#include <benchmark/benchmark.h>

#include <numeric>

#include "splitlab/engine.hpp"
#include "splitlab/metrics.hpp"
#include "splitlab/parallel.hpp"

using namespace splitlab;

namespace {

QuadraticFamily family(std::size_t clients, std::size_t dim) {
    QuadraticRecipe r;
    r.clients = clients;
    r.dim = dim;
    r.min_curvature = 0.1;
    r.heterogeneity = 1.0;
    r.sigma = 1.0;
    r.init_offset = 2.0;
    return make_quadratic_family(r);
}

TrainConfig config(Algorithm a, std::size_t clients, int threads) {
    TrainConfig c;
    c.algorithm = a;
    c.n_clients = clients;
    c.local_steps = 20;
    c.lr = 0.001;
    c.rounds = 20;
    c.threads = threads;
    return c;
}

void BM_FlRound(benchmark::State& state) {
    const int threads = static_cast<int>(state.range(0));
    const auto f = family(32, 256);
    const auto c = config(Algorithm::fl, 32, threads);
    const ParamVec x = f.initial_point();
    std::size_t r = 0;
    for (auto _ : state) benchmark::DoNotOptimize(fl_round(x, f, c, r++).next);
}
BENCHMARK(BM_FlRound)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime();

void BM_EnsembleSerial(benchmark::State& state) {
    const auto f = family(10, 64);
    const auto c = config(Algorithm::sl, 10, 1);
    std::vector<std::uint64_t> seeds(16);
    std::iota(seeds.begin(), seeds.end(), 0);
    for (auto _ : state) benchmark::DoNotOptimize(run_ensemble_serial(f, c, seeds));
}
BENCHMARK(BM_EnsembleSerial)->UseRealTime();

void BM_EnsembleOpenMP(benchmark::State& state) {
    const auto f = family(10, 64);
    const auto c = config(Algorithm::sl, 10, 1);
    std::vector<std::uint64_t> seeds(16);
    std::iota(seeds.begin(), seeds.end(), 0);
    for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(f, c, seeds, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_EnsembleOpenMP)->Arg(2)->Arg(4)->Arg(8)->UseRealTime();

void BM_LrSweep(benchmark::State& state) {
    const auto f = family(10, 16);
    const auto c = config(Algorithm::sl, 10, 1);
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    for (auto _ : state) {
        benchmark::DoNotOptimize(lr_sweep(f, c, default_lr_grid, seeds, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_LrSweep)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
