#include "splitlab/parallel.hpp"

#include "splitlab/engine.hpp"

namespace splitlab {

namespace {

TrainConfig with_seed(const TrainConfig& base, std::uint64_t seed) {
    TrainConfig c = base;
    c.seed = seed;
    c.threads = 1;
    return c;
}

}  // namespace

std::vector<RunTrace> run_ensemble(const Objective& objective, const TrainConfig& base,
                                   std::span<const std::uint64_t> seeds, int threads) {
    std::vector<RunTrace> traces(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t i) {
        traces[i] = run_training(objective, with_seed(base, seeds[i]));
    });
    return traces;
}

std::vector<RunTrace> run_ensemble_serial(const Objective& objective, const TrainConfig& base,
                                          std::span<const std::uint64_t> seeds) {
    std::vector<RunTrace> traces;
    traces.reserve(seeds.size());
    for (std::uint64_t s : seeds) traces.push_back(run_training(objective, with_seed(base, s)));
    return traces;
}

}  // namespace splitlab
