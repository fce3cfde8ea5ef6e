#include <gtest/gtest.h>

#include <stdexcept>

#include "splitlab/engine.hpp"
#include "splitlab/metrics.hpp"
#include "splitlab/parallel.hpp"

using namespace splitlab;

namespace {

QuadraticFamily family() {
    QuadraticRecipe r;
    r.clients = 8;
    r.dim = 5;
    r.min_curvature = 0.2;
    r.heterogeneity = 1.5;
    r.sigma = 1.0;
    r.init_offset = 3.0;
    return make_quadratic_family(r);
}

TrainConfig config(Algorithm a, int threads) {
    TrainConfig c;
    c.algorithm = a;
    c.n_clients = 8;
    c.local_steps = 4;
    c.lr = 0.02;
    c.rounds = 25;
    c.seed = 3;
    c.threads = threads;
    return c;
}

}  // namespace

TEST(Parallel, FlRoundsBitIdenticalToSerial) {
    const auto f = family();
    const auto serial = run_training(f, config(Algorithm::fl, 1));
    const auto par = run_training(f, config(Algorithm::fl, 4));
    EXPECT_EQ(serial.final_iterate, par.final_iterate);
    for (std::size_t r = 0; r < serial.records.size(); ++r) EXPECT_EQ(serial.records[r].drift, par.records[r].drift);
}

TEST(Parallel, MinibatchBitIdenticalToSerial) {
    const auto f = family();
    EXPECT_EQ(run_training(f, config(Algorithm::minibatch, 1)).final_iterate,
              run_training(f, config(Algorithm::minibatch, 3)).final_iterate);
}

TEST(Parallel, EnsembleMatchesSerialReference) {
    const auto f = family();
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6};
    for (auto a : {Algorithm::sl, Algorithm::fl}) {
        const auto s = run_ensemble_serial(f, config(a, 1), seeds);
        const auto p = run_ensemble(f, config(a, 1), seeds, 4);
        ASSERT_EQ(s.size(), p.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            EXPECT_EQ(s[i].seed, seeds[i]);
            EXPECT_EQ(s[i].final_iterate, p[i].final_iterate);
            EXPECT_EQ(s[i].averaged_grad_norm_sq, p[i].averaged_grad_norm_sq);
        }
    }
}

TEST(Parallel, SweepIndependentOfThreadCount) {
    const auto f = family();
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const std::vector<double> grid{0.001, 0.01, 0.1, 1.0};
    const auto a = lr_sweep(f, config(Algorithm::sl, 1), grid, seeds, 1);
    const auto b = lr_sweep(f, config(Algorithm::sl, 1), grid, seeds, 4);
    EXPECT_EQ(a.best_lr, b.best_lr);
    EXPECT_EQ(a.threshold_lr, b.threshold_lr);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (a.diverged[i]) continue;
        EXPECT_EQ(a.metric[i], b.metric[i]);
    }
}

TEST(Parallel, ForRethrowsFirstFailure) {
    std::vector<int> done(16, 0);
    try {
        parallel_for(16, 4, [&](std::size_t i) {
            done[i] = 1;
            if (i == 5 || i == 11) throw std::runtime_error("job " + std::to_string(i));
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "job 5");
    }
    for (int d : done) EXPECT_EQ(d, 1);
}
