#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "splitlab/dataset.hpp"
#include "splitlab/objectives.hpp"
#include "support.hpp"

using namespace splitlab;
using testing_support::rel_err;
using testing_support::scalar_family;
using testing_support::vec;

namespace {

std::shared_ptr<Dataset> blobs_with_bias(std::size_t n, int classes, std::uint64_t seed) {
    auto d = std::make_shared<Dataset>(make_blobs({n, 2, classes, 2.0, seed}));
    d->features.conservativeResize(Eigen::NoChange, 3);
    d->features.col(2).setOnes();
    return d;
}

// Coordinatewise check that mean(g - grad) is within 4 standard errors of 0.
void expect_unbiased(const Objective& obj, std::size_t client, const ParamVec& x, int draws) {
    const ParamVec exact = obj.local_grad(client, x);
    ParamVec sum = ParamVec::Zero(x.size()), sq = ParamVec::Zero(x.size());
    for (int t = 0; t < draws; ++t) {
        const ParamVec e = obj.stochastic_grad(client, x, StreamKey{99, static_cast<std::uint32_t>(t), 0, 0}) - exact;
        sum += e;
        sq += e.cwiseProduct(e);
    }
    const double n = draws;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double mean = sum[j] / n;
        const double se = std::sqrt(std::max(sq[j] / n - mean * mean, 0.0) / n);
        EXPECT_LE(std::abs(mean), 4.0 * se + 1e-14) << "coordinate " << j;
    }
}

}  // namespace

TEST(LocalGrad, ScalarQuadratic) {
    const auto f = scalar_family({1.0}, {1.0});
    EXPECT_DOUBLE_EQ(f.local_grad(0, vec({0.0}))[0], -1.0);
}

TEST(LocalGrad, IdentityCurvatureAtZeroCenter) {
    QuadraticFamily f({{Eigen::MatrixXd::Identity(2, 2), vec({0, 0}), 0.0}}, vec({0, 0}));
    EXPECT_EQ(f.local_grad(0, vec({3, 4})), vec({3, 4}));
}

TEST(LocalGrad, LogisticMatchesCentralDifference) {
    auto data = blobs_with_bias(1, 2, 3);
    LogisticFamily f(data, partition_iid(data->labels, 1, 0), 0.1, 1);
    const ParamVec x = vec({0.3, -0.7, 0.2});
    const ParamVec g = f.local_grad(0, x);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        ParamVec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (f.local_loss(0, xp) - f.local_loss(0, xm)) / (2 * h);
        EXPECT_LE(rel_err(g[j], fd), 1e-6) << j;
    }
}

TEST(LocalGrad, DimensionMismatchAndBadClient) {
    const auto f = scalar_family({1.0, -1.0}, {1.0, 1.0});
    EXPECT_THROW(f.local_grad(0, vec({0.0, 1.0})), UsageError);
    EXPECT_THROW(f.local_grad(2, vec({0.0})), UsageError);
    EXPECT_THROW(f.stochastic_grad(0, vec({0.0, 1.0}), {}), UsageError);
}

TEST(StochasticGrad, ZeroNoiseEqualsExact) {
    const auto f = scalar_family({1.0, -1.0}, {1.0, 1.0}, 0.0);
    for (std::uint32_t s = 0; s < 10; ++s) {
        EXPECT_EQ(f.stochastic_grad(1, vec({0.4}), {s, s, 0, s}), f.local_grad(1, vec({0.4})));
    }
}

TEST(StochasticGrad, ScalarNoiseMeanAndPower) {
    const auto f = scalar_family({1.0}, {1.0}, 1.0);
    const ParamVec x = vec({0.5});
    const double exact = f.local_grad(0, x)[0];
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
        const double e = f.stochastic_grad(0, x, {7, static_cast<std::uint32_t>(t / 100), 0, static_cast<std::uint32_t>(t % 100)})[0] - exact;
        sum += e;
        sq += e * e;
    }
    EXPECT_LE(std::abs(sum / n), 3.0 * std::pow(10.0, -2.5));
    EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(StochasticGrad, DeterministicInKey) {
    const auto f = scalar_family({1.0}, {1.0}, 1.0);
    const StreamKey k{5, 2, 0, 3};
    EXPECT_EQ(f.stochastic_grad(0, vec({0.1}), k), f.stochastic_grad(0, vec({0.1}), k));
    EXPECT_NE(f.stochastic_grad(0, vec({0.1}), k), f.stochastic_grad(0, vec({0.1}), k.with_step(4)));
}

TEST(Property, UnbiasedQuadratic) {
    QuadraticRecipe r;
    r.clients = 3;
    r.dim = 3;
    r.heterogeneity = 1.0;
    r.sigma = 2.0;
    const auto f = make_quadratic_family(r);
    expect_unbiased(f, 1, vec({0.3, -1.0, 2.0}), 100000);
}

TEST(Property, UnbiasedLogisticMinibatch) {
    auto data = blobs_with_bias(90, 2, 4);
    LogisticFamily f(data, partition_iid(data->labels, 2, 1), 0.01, 7);
    expect_unbiased(f, 0, vec({0.2, -0.1, 0.05}), 100000);
}

TEST(Property, UnbiasedMlpMinibatch) {
    auto data = std::make_shared<Dataset>(make_blobs({40, 2, 3, 2.0, 5}));
    MlpObjective f(data, partition_iid(data->labels, 2, 1), {2, 3, 3, Activation::tanh}, 4, 9);
    expect_unbiased(f, 1, f.initial_point(), 100000);
}

TEST(Property, VarianceWithinBound) {
    QuadraticRecipe r;
    r.clients = 2;
    r.dim = 4;
    r.sigma = 1.5;
    const auto f = make_quadratic_family(r);
    const ParamVec x = vec({1, 2, 3, 4});
    const ParamVec exact = f.local_grad(0, x);
    double sq = 0.0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) sq += (f.stochastic_grad(0, x, {3, static_cast<std::uint32_t>(t), 0, 0}) - exact).squaredNorm();
    EXPECT_LE(sq / n, 1.05 * 1.5 * 1.5);
    EXPECT_GE(sq / n, 0.95 * 1.5 * 1.5);
}

TEST(GlobalGrad, ScalarPair) {
    const auto f = scalar_family({1.0, -1.0}, {1.0, 1.0});
    EXPECT_DOUBLE_EQ(global_grad(f, vec({0.0}))[0], 0.0);
    EXPECT_DOUBLE_EQ(global_grad(f, vec({2.0}))[0], 2.0);
}

TEST(GlobalGrad, SingleClientEqualsLocal) {
    QuadraticRecipe r;
    r.clients = 1;
    r.dim = 3;
    const auto f = make_quadratic_family(r);
    const ParamVec x = vec({0.1, 0.2, -0.3});
    EXPECT_EQ(global_grad(f, x), f.local_grad(0, x));
}

TEST(GlobalLoss, ScalarPair) {
    const auto f = scalar_family({1.0, -1.0}, {1.0, 1.0});
    EXPECT_DOUBLE_EQ(global_loss(f, vec({0.0})), 0.5);
    EXPECT_DOUBLE_EQ(global_loss(f, vec({2.0})), 2.5);
    const auto same = scalar_family({0.7, 0.7}, {2.0, 2.0});
    EXPECT_DOUBLE_EQ(global_loss(same, vec({0.7})), 0.0);
}

TEST(QuadraticFamily, RejectsAsymmetricAndIndefinite) {
    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, 0, 1;
    EXPECT_THROW(QuadraticFamily({{asym, vec({0, 0}), 0.0}}, vec({0, 0})), UsageError);
    Eigen::MatrixXd indef(2, 2);
    indef << 1, 0, 0, -1;
    EXPECT_THROW(QuadraticFamily({{indef, vec({0, 0}), 0.0}}, vec({0, 0})), UsageError);
    EXPECT_THROW(QuadraticFamily({{Eigen::MatrixXd::Identity(1, 1), vec({0}), -1.0}}, vec({0})), UsageError);
}

TEST(QuadraticFamily, OptimumOfScalarPair) {
    const auto f = scalar_family({1.0, -3.0}, {1.0, 3.0});
    // (1*1 + 3*(-3)) / 4 = -2
    EXPECT_NEAR(f.optimum()[0], -2.0, 1e-14);
    EXPECT_NEAR(*f.optimum_value(), global_loss(f, vec({-2.0})), 1e-14);
    EXPECT_NEAR(global_grad(f, f.optimum()).norm(), 0.0, 1e-14);
}

TEST(AnalyticConstants, ScalarPairs) {
    auto k = analytic_constants(scalar_family({1.0, -1.0}, {1.0, 1.0}));
    EXPECT_DOUBLE_EQ(k.L, 1.0);
    EXPECT_DOUBLE_EQ(k.B, 1.0);
    EXPECT_DOUBLE_EQ(k.G, 1.0);
    EXPECT_DOUBLE_EQ(analytic_constants(scalar_family({0.5, 0.5}, {1.0, 1.0})).G, 0.0);
    EXPECT_DOUBLE_EQ(analytic_constants(scalar_family({2.0, -2.0}, {1.0, 1.0})).G, 2.0);
}

TEST(AnalyticConstants, RefusesMixedCurvature) {
    EXPECT_THROW(analytic_constants(scalar_family({1.0, -1.0}, {1.0, 2.0})), UsageError);
}

TEST(AnalyticConstants, NoiseAndSmoothnessFromRecipe) {
    QuadraticRecipe r;
    r.clients = 5;
    r.dim = 3;
    r.smoothness = 4.0;
    r.min_curvature = 0.5;
    r.heterogeneity = 1.5;
    r.sigma = 0.7;
    const auto k = analytic_constants(make_quadratic_family(r));
    EXPECT_NEAR(k.L, 4.0, 1e-12);
    EXPECT_NEAR(k.sigma2, 0.49, 1e-12);
    EXPECT_NEAR(k.G, 1.5, 1e-12);
}

class DissimilarityProperty : public ::testing::TestWithParam<int> {};

TEST_P(DissimilarityProperty, HoldsAtRandomProbes) {
    QuadraticRecipe r;
    r.clients = 2 + static_cast<std::size_t>(GetParam());
    r.dim = 1 + static_cast<std::size_t>(GetParam()) % 4;
    r.smoothness = 2.0;
    r.min_curvature = 0.25;
    r.heterogeneity = 0.5 * GetParam();
    r.seed = static_cast<std::uint64_t>(GetParam());
    const auto f = make_quadratic_family(r);
    const auto k = analytic_constants(f);
    const auto probes = uniform_probes(f.dim(), 1000, -5.0, 5.0, 17 + GetParam());
    for (const auto& x : probes) {
        double lhs = 0.0;
        for (std::size_t i = 0; i < f.num_clients(); ++i) lhs += f.local_grad(i, x).squaredNorm();
        lhs /= static_cast<double>(f.num_clients());
        const double rhs = k.B * k.B * global_grad(f, x).squaredNorm() + k.G * k.G;
        ASSERT_LE(lhs, rhs * (1 + 1e-12) + 1e-12);
    }
}

TEST_P(DissimilarityProperty, SmoothnessAtRandomPairs) {
    QuadraticRecipe r;
    r.clients = 3;
    r.dim = 2 + static_cast<std::size_t>(GetParam()) % 3;
    r.smoothness = 3.0;
    r.min_curvature = 0.1;
    r.heterogeneity = 1.0;
    r.seed = static_cast<std::uint64_t>(GetParam());
    const auto f = make_quadratic_family(r);
    const double L = analytic_constants(f).L;
    const auto a = uniform_probes(f.dim(), 1000, -4.0, 4.0, 100 + GetParam());
    const auto b = uniform_probes(f.dim(), 1000, -4.0, 4.0, 200 + GetParam());
    for (std::size_t p = 0; p < a.size(); ++p) {
        for (std::size_t i = 0; i < f.num_clients(); ++i) {
            ASSERT_LE((f.local_grad(i, a[p]) - f.local_grad(i, b[p])).norm(), L * (a[p] - b[p]).norm() * (1 + 1e-12));
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Families, DissimilarityProperty, ::testing::Range(0, 5));

TEST(EstimateConstants, RecoversScalarPairG) {
    const auto f = scalar_family({1.0, -1.0}, {1.0, 1.0});
    const auto probes = uniform_probes(1, 50, -3.0, 3.0, 1);
    const auto k = estimate_constants(f, probes, 0, 0);
    EXPECT_NEAR(k.G * k.G, 1.0, 0.1);
    EXPECT_NEAR(k.L, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(k.sigma2, 0.0);
}

TEST(EstimateConstants, ZeroNoiseAndIid) {
    const auto f = scalar_family({0.3, 0.3, 0.3}, {2.0, 2.0, 2.0});
    const auto k = estimate_constants(f, uniform_probes(1, 20, -1.0, 1.0, 2), 10, 5);
    EXPECT_EQ(k.sigma2, 0.0);
    EXPECT_LE(k.G * k.G, 1e-9);
    EXPECT_GE(k.B, 1.0);
}

TEST(EstimateConstants, NoisyVarianceNearTruth) {
    QuadraticRecipe r;
    r.clients = 2;
    r.dim = 2;
    r.sigma = 1.0;
    const auto f = make_quadratic_family(r);
    const auto k = estimate_constants(f, uniform_probes(2, 10, -1.0, 1.0, 3), 2000, 8);
    // max over 20 (probe, client) means of 2000 draws
    EXPECT_NEAR(k.sigma2, 1.0, 0.15);
}

TEST(EstimateConstants, RejectsTooFewOrIdenticalProbes) {
    const auto f = scalar_family({1.0, -1.0}, {1.0, 1.0});
    EXPECT_THROW(estimate_constants(f, uniform_probes(1, 9, -1, 1, 0), 1, 0), EstimationError);
    EXPECT_THROW(estimate_constants(f, std::vector<ParamVec>(12, vec({0.5})), 1, 0), EstimationError);
}

TEST(EstimateConstants, MixedCurvatureGivesBAtLeastOne) {
    const auto f = scalar_family({1.0, -1.0}, {1.0, 3.0});
    const auto k = estimate_constants(f, uniform_probes(1, 40, -3.0, 3.0, 4), 0, 0);
    EXPECT_GE(k.B, 1.0);
    EXPECT_NEAR(k.L, 3.0, 1e-12);
    // y is not affine in s here, so the fit only holds on average over the probes
    double ys = 0.0, ss = 0.0;
    for (const auto& x : uniform_probes(1, 40, -3.0, 3.0, 4)) {
        ys += 0.5 * (f.local_grad(0, x).squaredNorm() + f.local_grad(1, x).squaredNorm()) / 40.0;
        ss += global_grad(f, x).squaredNorm() / 40.0;
    }
    EXPECT_LE(ys, k.B * k.B * ss + k.G * k.G + 1e-9);
}

TEST(Generators, QuadraticRecipeHitsTargetG) {
    QuadraticRecipe r;
    r.clients = 10;
    r.dim = 4;
    r.heterogeneity = 2.0;
    r.seed = 12;
    const auto f = make_quadratic_family(r);
    EXPECT_NEAR(analytic_constants(f).G, 2.0, 1e-12);
    EXPECT_NEAR(f.optimum().norm(), 0.0, 1e-12);
    EXPECT_NEAR(f.initial_point().norm(), 1.0, 1e-12);
}

TEST(Generators, SingleClientCannotBeHeterogeneous) {
    QuadraticRecipe r;
    r.clients = 1;
    r.heterogeneity = 1.0;
    EXPECT_THROW(make_quadratic_family(r), UsageError);
}

TEST(Generators, SpectralFamily) {
    SpectralRecipe r;
    const auto f = make_spectral_family(r);
    const auto k = analytic_constants(f);
    EXPECT_NEAR(k.L, 1.0, 1e-12);
    EXPECT_EQ(k.G, 0.0);
    EXPECT_NEAR(k.sigma2, 1.0, 1e-12);
    // every eigen-direction starts with the same loss share 1/2 * lambda * (1/sqrt(lambda))^2
    EXPECT_NEAR(global_loss(f, f.initial_point()), 0.5 * 8, 1e-12);
}
