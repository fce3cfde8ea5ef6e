#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "splitlab/rng.hpp"
#include "splitlab/types.hpp"

namespace splitlab {

/// Smoothness, variance and dissimilarity constants:
///   ||grad f_i(x) - grad f_i(y)|| <= L ||x - y||
///   E||g_i(x) - grad f_i(x)||^2 <= sigma2
///   (1/N) sum_i ||grad f_i(x)||^2 <= B^2 ||grad f(x)||^2 + G^2
struct HeterogeneityConstants {
    double L = 1.0;
    double sigma2 = 0.0;
    double B = 1.0;
    double G = 0.0;
};

/// A federated objective f(x) = (1/N) sum_i f_i(x) with exact and stochastic
/// per-client gradient oracles. Instances are immutable after construction, so
/// one objective may be shared by concurrent runs.
///
/// The public entry points validate arguments and forward to the do_* hooks.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::string_view family() const = 0;
    virtual Eigen::Index dim() const = 0;
    virtual std::size_t num_clients() const = 0;

    double local_loss(std::size_t client, const ParamVec& x) const;
    ParamVec local_grad(std::size_t client, const ParamVec& x) const;

    /// Unbiased estimate of grad f_i(x). The random bits are a pure function of
    /// `key` (seed, round, client, step); key.client is overwritten with `client`.
    ParamVec stochastic_grad(std::size_t client, const ParamVec& x, StreamKey key) const;

    /// Per-client sample counts n_i; empty for families without samples.
    virtual std::vector<std::size_t> sample_counts() const { return {}; }

    /// Number of mini-batches in one local epoch, used for tau_i = E * n_i / b.
    virtual std::size_t batches_per_epoch(std::size_t /*client*/) const { return 1; }

    virtual ParamVec initial_point() const = 0;

    /// min_x f(x) when known in closed form.
    virtual std::optional<double> optimum_value() const { return std::nullopt; }

    /// Held-out accuracy for classification families.
    virtual std::optional<double> accuracy(const ParamVec& /*x*/) const { return std::nullopt; }

protected:
    virtual double do_local_loss(std::size_t client, const ParamVec& x) const = 0;
    virtual ParamVec do_local_grad(std::size_t client, const ParamVec& x) const = 0;
    virtual ParamVec do_stochastic_grad(std::size_t client, const ParamVec& x,
                                        const StreamKey& key) const = 0;

    void check_args(std::size_t client, const ParamVec& x) const;
};

/// (1/N) sum_i grad f_i(x).
ParamVec global_grad(const Objective& objective, const ParamVec& x);

/// (1/N) sum_i f_i(x). Unweighted, matching the analysis.
double global_loss(const Objective& objective, const ParamVec& x);

/// f_i(x) = 1/2 (x - c_i)^T A_i (x - c_i), stochastic gradient adds isotropic
/// Gaussian noise with E||eps||^2 = noise_sigma^2.
struct QuadraticClient {
    Eigen::MatrixXd curvature;
    ParamVec center;
    double noise_sigma = 0.0;
};

class QuadraticFamily final : public Objective {
public:
    QuadraticFamily(std::vector<QuadraticClient> clients, ParamVec initial);

    std::string_view family() const override { return "quadratic"; }
    Eigen::Index dim() const override { return dim_; }
    std::size_t num_clients() const override { return clients_.size(); }
    ParamVec initial_point() const override { return initial_; }
    std::optional<double> optimum_value() const override { return optimum_value_; }

    const QuadraticClient& client(std::size_t i) const { return clients_.at(i); }
    bool shared_curvature() const noexcept { return shared_; }

    /// argmin of f; least-norm solution when sum_i A_i is singular.
    const ParamVec& optimum() const noexcept { return optimum_; }

protected:
    double do_local_loss(std::size_t client, const ParamVec& x) const override;
    ParamVec do_local_grad(std::size_t client, const ParamVec& x) const override;
    ParamVec do_stochastic_grad(std::size_t client, const ParamVec& x,
                                const StreamKey& key) const override;

private:
    std::vector<QuadraticClient> clients_;
    ParamVec initial_;
    Eigen::Index dim_ = 0;
    bool shared_ = false;
    ParamVec optimum_;
    double optimum_value_ = 0.0;
};

/// Shared-curvature family with a prescribed dissimilarity G.
///
/// A = diag(linspace(min_curvature, smoothness, dim)); centers are seeded
/// Gaussian draws, re-centered to mean zero and scaled so that
/// (1/N) sum ||A (c_i - cbar)||^2 = heterogeneity^2. The optimum is the origin
/// and x0 = init_offset * (1, ..., 1) / sqrt(dim).
struct QuadraticRecipe {
    std::size_t clients = 2;
    std::size_t dim = 1;
    double smoothness = 1.0;
    double min_curvature = 1.0;
    double heterogeneity = 0.0;
    double sigma = 0.0;
    double init_offset = 1.0;
    std::uint64_t seed = 0;
};

QuadraticFamily make_quadratic_family(const QuadraticRecipe& recipe);

/// IID family whose curvatures are log-spaced in [min_curvature, smoothness].
/// The initial offset along eigen-direction j is init_scale / sqrt(lambda_j),
/// which spreads the initialization error evenly across curvature scales.
struct SpectralRecipe {
    std::size_t clients = 4;
    std::size_t dim = 8;
    double smoothness = 1.0;
    double min_curvature = 1e-3;
    double sigma = 1.0;
    double init_scale = 1.0;
};

QuadraticFamily make_spectral_family(const SpectralRecipe& recipe);

/// Closed-form constants for shared-curvature quadratics. B = 1 and
/// G^2 = (1/N) sum ||A (c_i - cbar)||^2, which is exact for this family.
/// Throws UsageError when curvatures differ across clients.
HeterogeneityConstants analytic_constants(const QuadraticFamily& family);

/// Empirical constants from probe points (see DESIGN notes in the README).
/// Requires at least 10 probes that are not all identical.
HeterogeneityConstants estimate_constants(const Objective& objective,
                                          const std::vector<ParamVec>& probes,
                                          std::size_t samples_per_point, std::uint64_t seed);

/// Uniform probes in [lo, hi]^d drawn from a seeded stream.
std::vector<ParamVec> uniform_probes(Eigen::Index dim, std::size_t count, double lo, double hi,
                                     std::uint64_t seed);

}  // namespace splitlab
