#include <gtest/gtest.h>

#include <cmath>

#include "splitlab/rng.hpp"
#include "splitlab/theory.hpp"
#include "support.hpp"

using namespace splitlab;
using testing_support::rel_err;

namespace {

HeterogeneityConstants consts(double L, double sigma2, double B, double G) { return {L, sigma2, B, G}; }

BoundInputs inputs(HeterogeneityConstants c, std::size_t N, std::size_t K, std::size_t R, double eta, double F,
                   double eta_g = 1.0) {
    BoundInputs in;
    in.constants = c;
    in.N = N;
    in.K = K;
    in.R = R;
    in.eta = eta;
    in.eta_g = eta_g;
    in.F = F;
    return in;
}

// Random parameterisation for property tests.
struct Draw {
    HeterogeneityConstants c;
    std::size_t N, K, R;
    double F;
};

Draw draw(std::uint64_t seed) {
    Stream s(seed, Purpose::generator);
    Draw d;
    d.c = consts(0.1 + 10.0 * s.uniform(), 4.0 * s.uniform(), 1.0 + 3.0 * s.uniform(), 3.0 * s.uniform());
    d.N = 1 + static_cast<std::size_t>(s.uniform() * 20);
    d.K = 1 + static_cast<std::size_t>(s.uniform() * 10);
    d.R = 1 + static_cast<std::size_t>(s.uniform() * 1000);
    d.F = 5.0 * s.uniform();
    return d;
}

}  // namespace

TEST(MaxLr, WorkedValues) {
    const auto c = consts(1, 0, 1, 0);
    EXPECT_LE(rel_err(max_lr_sl(c, 10, 5), 1.0 / (100.0 * std::sqrt(3.0))), 1e-12);
    EXPECT_LE(rel_err(max_lr_sl(c, 1, 1), 1.0 / (2.0 * std::sqrt(3.0))), 1e-12);
    EXPECT_LE(rel_err(max_lr_fl(c, 5, 1.0), 0.1 / std::sqrt(3.0)), 1e-12);
    EXPECT_LE(rel_err(max_lr_fl(c, 5, 2.0), 0.05), 1e-12);
    EXPECT_LT(max_lr_fl(c, 5, 1e12), 1e-12);
    EXPECT_LE(rel_err(max_lr_drift(c, 2, 3), 1.0 / 12.0), 1e-12);
    EXPECT_LE(rel_err(max_lr_one_client(c, 2), 1.0 / (4.0 * std::sqrt(5.0))), 1e-12);
}

TEST(MaxLr, FlOverSlIsN) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto d = draw(s);
        EXPECT_LE(rel_err(max_lr_fl(d.c, d.K, 1.0) / max_lr_sl(d.c, d.N, d.K), static_cast<double>(d.N)), 1e-12);
    }
}

TEST(MaxLr, RejectsBadConstants) {
    EXPECT_THROW(max_lr_sl(consts(0, 0, 1, 0), 1, 1), UsageError);
    EXPECT_THROW(max_lr_sl(consts(1, 0, 0.5, 0), 1, 1), UsageError);
    EXPECT_THROW(max_lr_sl(consts(1, 0, 1, 0), 0, 1), UsageError);
    EXPECT_THROW(max_lr_fl(consts(1, 0, 1, 0), 1, 0.0), UsageError);
}

TEST(DriftBound, WorkedValues) {
    EXPECT_LE(rel_err(drift_bound(consts(1, 0, 1, 1), 2, 1, 0.1, 0.0), 0.32 / 0.84), 1e-12);
    EXPECT_EQ(drift_bound(consts(1, 1, 1, 1), 2, 1, 0.0, 3.0), 0.0);
    EXPECT_EQ(drift_bound(consts(1, 0, 1, 0), 4, 3, 0.01, 0.0), 0.0);
}

TEST(DriftBound, RefusesOutsideConstraint) {
    EXPECT_THROW(drift_bound(consts(1, 0, 1, 1), 2, 1, 0.25, 0.0), ConstraintError);
    EXPECT_THROW(drift_bound(consts(1, 0, 1, 1), 2, 1, 0.3, 0.0), ConstraintError);
    EXPECT_NO_THROW(drift_bound(consts(1, 0, 1, 1), 2, 1, 0.2499, 0.0));
}

TEST(DriftBound, IncreasingInGradNorm) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto d = draw(s);
        const double eta = 0.9 * max_lr_drift(d.c, d.N, d.K);
        double prev = drift_bound(d.c, d.N, d.K, eta, 0.0);
        for (double g : {0.1, 1.0, 10.0}) {
            const double cur = drift_bound(d.c, d.N, d.K, eta, g);
            EXPECT_GT(cur, prev);
            prev = cur;
        }
    }
}

TEST(SlBound, WorkedExample) {
    const auto r = sl_bound(inputs(consts(1, 0, 1, 1), 2, 1, 100, 0.001, 2.0));
    EXPECT_LE(rel_err(r.t1_init, 40.0), 1e-12);
    EXPECT_LE(rel_err(r.t2_drift, 4.8e-5), 1e-12);
    EXPECT_EQ(r.t3_variance, 0.0);
    EXPECT_LE(rel_err(r.total, 40.000048), 1e-12);
    EXPECT_TRUE(r.lr_ok);
}

TEST(SlBound, EvaluatesWhenConstraintFails) {
    const auto r = sl_bound(inputs(consts(1, 1, 1, 1), 10, 5, 100, 0.01, 1.0));
    EXPECT_FALSE(r.lr_ok);
    EXPECT_LE(rel_err(r.lr_max, 1.0 / (100.0 * std::sqrt(3.0))), 1e-12);
    EXPECT_TRUE(std::isfinite(r.total));
}

TEST(SlBound, DoublingRHalvesOnlyInitTerm) {
    const auto a = sl_bound(inputs(consts(2, 1, 1.5, 1), 3, 2, 100, 0.001, 2.0));
    const auto b = sl_bound(inputs(consts(2, 1, 1.5, 1), 3, 2, 200, 0.001, 2.0));
    EXPECT_LE(rel_err(b.t1_init, a.t1_init / 2), 1e-14);
    EXPECT_EQ(a.t2_drift, b.t2_drift);
    EXPECT_EQ(a.t3_variance, b.t3_variance);
}

TEST(SlBound, VanishesWithoutNoiseOrHeterogeneity) {
    double prev = INFINITY;
    for (std::size_t R : {10u, 1000u, 100000u, 10000000u}) {
        const double t = sl_bound(inputs(consts(1, 0, 1, 0), 2, 2, R, 0.01, 1.0)).total;
        EXPECT_LT(t, prev);
        prev = t;
    }
    EXPECT_LT(prev, 1e-4);
}

TEST(Corollary, WorkedValues) {
    EXPECT_LE(rel_err(sl_corollary_rate(1.0, consts(1, 0, 1, 0), 3, 2, 16), 1.0), 1e-12);
    EXPECT_LE(rel_err(sl_corollary_rate(1.0, consts(1, 1, 1, 1), 5, 1, 100), 0.98), 1e-12);
    EXPECT_LE(rel_err(sl_corollary_rate(1.0, consts(1, 0, 1, 0), 2, 2, 64),
                      sl_corollary_rate(1.0, consts(1, 0, 1, 0), 2, 2, 16) / 2.0), 1e-12);
}

TEST(Corollary, IsTheBoundAtSubstitutedLr) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto d = draw(s + 1000);
        const double eta = 1.0 / (static_cast<double>(d.N * d.K) * std::sqrt(static_cast<double>(d.R)));
        const double total = sl_bound(inputs(d.c, d.N, d.K, d.R, eta, d.F)).total;
        EXPECT_LE(rel_err(sl_corollary_rate(d.F, d.c, d.N, d.K, d.R), total), 1e-12) << s;
    }
}

TEST(FlBound, WorkedExamples) {
    const auto r = fl_bound(inputs(consts(1, 0, 1, 1), 2, 1, 100, 0.001, 2.0, 1.0));
    EXPECT_LE(rel_err(r.t1_init, 80.0), 1e-12);
    EXPECT_EQ(r.t2_drift, 0.0);
    EXPECT_EQ(r.total, r.t1_init);
    // T1 scales as 1/eta_g.
    const auto g = fl_bound(inputs(consts(1, 0, 1, 1), 2, 1, 100, 0.001, 2.0, 0.001));
    EXPECT_LE(rel_err(g.t1_init, 80000.0), 1e-12);
    const auto k1 = fl_bound(inputs(consts(3, 4, 2, 5), 4, 1, 10, 0.3, 1.0));
    EXPECT_EQ(k1.t2_drift, 0.0);
    const auto r2 = fl_bound(inputs(consts(1, 1, 1, 1), 2, 3, 10, 0.01, 1.0));
    EXPECT_LE(rel_err(r2.t2_drift, 12.0 * 3 * 2 * 1e-4 + 6.0 * 2 * 1e-4), 1e-12);
    EXPECT_LE(rel_err(r2.t3_variance, 4.0 * 0.01 / 2.0), 1e-12);
}

TEST(OneClient, WorkedValues) {
    EXPECT_LE(rel_err(one_client_bound(inputs(consts(1, 0, 1, 1), 2, 1, 10, 0.1, 1.0)), 6.4), 1e-12);
    EXPECT_LE(rel_err(one_client_bound(inputs(consts(1, 0, 1, 0), 2, 3, 10, 0.1, 1.0)), 4.0 / 6.0), 1e-12);
    // floor 4 G^2 as eta -> 0 and R -> infinity (R grows faster than 1/eta)
    const double tiny = one_client_bound(inputs(consts(1, 1, 1, 1.5), 2, 1, 1000000000000, 1e-6, 1.0));
    EXPECT_NEAR(tiny, 9.0, 1e-3);
}

TEST(Bounds, MonotoneInEachConstant) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto d = draw(s + 5000);
        const double eta = 0.5 * std::min(max_lr_sl(d.c, d.N, d.K), max_lr_fl(d.c, d.K, 1.0));
        auto base = inputs(d.c, d.N, d.K, d.R, eta, d.F);
        for (auto bound : {+[](const BoundInputs& i) { return sl_bound(i).total; },
                           +[](const BoundInputs& i) { return fl_bound(i).total; }, &one_client_bound}) {
            const double b0 = bound(base);
            auto more = base;
            more.R += 1;
            if (d.F > 0) {
                EXPECT_LT(bound(more), b0);
            }
            more = base;
            more.constants.sigma2 += 0.5;
            EXPECT_GE(bound(more), b0);
            more = base;
            more.constants.G += 0.5;
            EXPECT_GE(bound(more), b0);
        }
        // drift and variance terms grow with eta
        auto up = base;
        up.eta *= 1.5;
        EXPECT_GE(sl_bound(up).t2_drift + sl_bound(up).t3_variance, sl_bound(base).t2_drift + sl_bound(base).t3_variance);
        EXPECT_GE(fl_bound(up).t2_drift + fl_bound(up).t3_variance, fl_bound(base).t2_drift + fl_bound(base).t3_variance);
    }
}

TEST(Bounds, ReportInvariants) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto d = draw(s + 9000);
        for (double scale : {0.5, 2.0}) {
            const auto in = inputs(d.c, d.N, d.K, d.R, scale * max_lr_sl(d.c, d.N, d.K), d.F);
            for (const auto& r : {sl_bound(in), fl_bound(in)}) {
                EXPECT_DOUBLE_EQ(r.total, r.t1_init + r.t2_drift + r.t3_variance);
                EXPECT_EQ(r.lr_ok, in.eta <= r.lr_max);
            }
        }
    }
}

TEST(Bounds, InputValidation) {
    auto in = inputs(consts(1, 0, 1, 0), 2, 1, 100, 0.001, 1.0);
    in.R = 0;
    EXPECT_THROW(sl_bound(in), UsageError);
    in.R = 10;
    in.F = -1.0;
    EXPECT_THROW(fl_bound(in), UsageError);
    in.F = 1.0;
    in.eta = 0.0;
    EXPECT_THROW(sl_bound(in), UsageError);
}

TEST(EffectiveLr, Definitions) {
    EXPECT_DOUBLE_EQ(effective_lr(Algorithm::fl, 10, 5, 0.01), 0.05);
    EXPECT_DOUBLE_EQ(effective_lr(Algorithm::sl, 10, 5, 0.01), 0.5);
    EXPECT_THROW(effective_lr(Algorithm::minibatch, 10, 5, 0.01), UsageError);
    const double fl = lr_for_effective(Algorithm::fl, 10, 5, 0.1);
    const double sl = lr_for_effective(Algorithm::sl, 10, 5, 0.1);
    EXPECT_DOUBLE_EQ(fl, 0.02);
    EXPECT_DOUBLE_EQ(sl, 0.002);
    EXPECT_LE(rel_err(fl, 10.0 * sl), 1e-15);
}

TEST(RoundComplexity, WorkedValues) {
    EXPECT_LE(rel_err(round_complexity(Algorithm::fl, 1.0, consts(1, 1, 1, 0), 10, 2, 0.1), 105.25), 1e-12);
    EXPECT_LE(rel_err(round_complexity(Algorithm::sl, 1.0, consts(1, 1, 1, 0), 10, 2, 0.1), 100.0 + 25.0 + 5.0), 1e-12);
    EXPECT_THROW(round_complexity(Algorithm::fl, 1.0, consts(1, 1, 1, 0), 10, 2, 0.0), UsageError);
    EXPECT_THROW(round_complexity(Algorithm::minibatch, 1.0, consts(1, 1, 1, 0), 10, 2, 0.1), UsageError);
}

TEST(RoundComplexity, SlNeverBetterThanFl) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        auto d = draw(s + 20000);
        if (s % 7 == 0) d.c.sigma2 = 0.0;
        if (s % 11 == 0) d.N = 1;
        const double eps = 0.01 + 0.5 * static_cast<double>(s % 13) / 13.0;
        const double sl = round_complexity(Algorithm::sl, d.F, d.c, d.N, d.K, eps);
        const double fl = round_complexity(Algorithm::fl, d.F, d.c, d.N, d.K, eps);
        const double s4 = d.c.sigma2 * d.c.sigma2;
        const double n2 = static_cast<double>(d.N * d.N);
        const double k2 = static_cast<double>(d.K * d.K);
        EXPECT_NEAR(sl - fl, s4 * (1.0 - 1.0 / n2) / (k2 * eps * eps), 1e-9 * sl);
        if (d.c.sigma2 == 0.0 || d.N == 1) {
            EXPECT_EQ(sl, fl);
        } else {
            EXPECT_GT(sl, fl);
        }
    }
}
