#include "splitlab/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace splitlab {

void Objective::check_args(std::size_t client, const ParamVec& x) const {
    if (client >= num_clients()) {
        throw UsageError("client index " + std::to_string(client) + " out of range (" +
                         std::to_string(num_clients()) + " clients)");
    }
    if (x.size() != dim()) {
        throw UsageError("dimension mismatch: expected " + std::to_string(dim()) + ", got " +
                         std::to_string(x.size()));
    }
}

double Objective::local_loss(std::size_t client, const ParamVec& x) const {
    check_args(client, x);
    return do_local_loss(client, x);
}

ParamVec Objective::local_grad(std::size_t client, const ParamVec& x) const {
    check_args(client, x);
    return do_local_grad(client, x);
}

ParamVec Objective::stochastic_grad(std::size_t client, const ParamVec& x, StreamKey key) const {
    check_args(client, x);
    key.client = static_cast<std::uint32_t>(client);
    return do_stochastic_grad(client, x, key);
}

ParamVec global_grad(const Objective& objective, const ParamVec& x) {
    ParamVec sum = ParamVec::Zero(objective.dim());
    for (std::size_t i = 0; i < objective.num_clients(); ++i) sum += objective.local_grad(i, x);
    return sum / static_cast<double>(objective.num_clients());
}

double global_loss(const Objective& objective, const ParamVec& x) {
    double sum = 0.0;
    for (std::size_t i = 0; i < objective.num_clients(); ++i) sum += objective.local_loss(i, x);
    return sum / static_cast<double>(objective.num_clients());
}

// ---------------------------------------------------------------------------
// QuadraticFamily

QuadraticFamily::QuadraticFamily(std::vector<QuadraticClient> clients, ParamVec initial)
    : clients_(std::move(clients)), initial_(std::move(initial)) {
    if (clients_.empty()) throw UsageError("quadratic family needs at least one client");
    dim_ = clients_.front().center.size();
    if (dim_ == 0) throw UsageError("quadratic family needs dimension >= 1");
    if (initial_.size() != dim_) throw UsageError("initial point has wrong dimension");
    if (!initial_.allFinite()) throw UsageError("initial point must be finite");

    Eigen::MatrixXd curvature_sum = Eigen::MatrixXd::Zero(dim_, dim_);
    ParamVec rhs = ParamVec::Zero(dim_);
    shared_ = true;
    for (std::size_t i = 0; i < clients_.size(); ++i) {
        const auto& c = clients_[i];
        const std::string who = "client " + std::to_string(i);
        if (c.center.size() != dim_ || c.curvature.rows() != dim_ || c.curvature.cols() != dim_) {
            throw UsageError(who + ": curvature/center dimension mismatch");
        }
        if (!c.center.allFinite() || !c.curvature.allFinite()) {
            throw UsageError(who + ": non-finite curvature or center");
        }
        if (!(c.noise_sigma >= 0.0) || !std::isfinite(c.noise_sigma)) {
            throw UsageError(who + ": noise_sigma must be a finite nonnegative number");
        }
        const double scale = std::max(1.0, c.curvature.cwiseAbs().maxCoeff());
        if ((c.curvature - c.curvature.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw UsageError(who + ": curvature is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.curvature, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
            throw UsageError(who + ": curvature is not positive semidefinite");
        }
        if (i > 0 && c.curvature != clients_.front().curvature) shared_ = false;
        curvature_sum += c.curvature;
        rhs += c.curvature * c.center;
    }

    optimum_ = curvature_sum.completeOrthogonalDecomposition().solve(rhs);
    optimum_value_ = global_loss(*this, optimum_);
}

double QuadraticFamily::do_local_loss(std::size_t client, const ParamVec& x) const {
    const auto& c = clients_[client];
    const ParamVec diff = x - c.center;
    return 0.5 * diff.dot(c.curvature * diff);
}

ParamVec QuadraticFamily::do_local_grad(std::size_t client, const ParamVec& x) const {
    const auto& c = clients_[client];
    return c.curvature * (x - c.center);
}

ParamVec QuadraticFamily::do_stochastic_grad(std::size_t client, const ParamVec& x,
                                             const StreamKey& key) const {
    ParamVec g = do_local_grad(client, x);
    const double sigma = clients_[client].noise_sigma;
    if (sigma == 0.0) return g;
    Stream stream(key, Purpose::gradient);
    std::normal_distribution<double> noise(0.0, sigma / std::sqrt(static_cast<double>(dim_)));
    for (Eigen::Index j = 0; j < dim_; ++j) g[j] += noise(stream);
    return g;
}

// ---------------------------------------------------------------------------
// Generators

QuadraticFamily make_quadratic_family(const QuadraticRecipe& r) {
    if (r.clients == 0 || r.dim == 0) throw UsageError("quadratic recipe needs clients >= 1 and dim >= 1");
    if (!(r.smoothness > 0.0) || !(r.min_curvature > 0.0) || r.min_curvature > r.smoothness) {
        throw UsageError("quadratic recipe needs 0 < min_curvature <= smoothness");
    }
    if (!(r.heterogeneity >= 0.0) || !(r.sigma >= 0.0)) {
        throw UsageError("quadratic recipe needs heterogeneity >= 0 and sigma >= 0");
    }
    if (r.clients == 1 && r.heterogeneity > 0.0) {
        throw UsageError("a single client cannot realize heterogeneity > 0");
    }
    const auto d = static_cast<Eigen::Index>(r.dim);
    ParamVec diag = ParamVec::Constant(1, r.smoothness);
    if (r.dim > 1) diag = ParamVec::LinSpaced(d, r.min_curvature, r.smoothness);
    const Eigen::MatrixXd curvature = diag.asDiagonal();

    std::vector<ParamVec> centers(r.clients, ParamVec::Zero(d));
    if (r.heterogeneity > 0.0) {
        Stream stream(r.seed, Purpose::generator);
        std::normal_distribution<double> normal;
        ParamVec mean = ParamVec::Zero(d);
        for (auto& c : centers) {
            for (Eigen::Index j = 0; j < d; ++j) c[j] = normal(stream);
            mean += c;
        }
        mean /= static_cast<double>(r.clients);
        double spread = 0.0;
        for (auto& c : centers) {
            c -= mean;
            spread += (curvature * c).squaredNorm();
        }
        spread /= static_cast<double>(r.clients);
        const double scale = r.heterogeneity / std::sqrt(spread);
        for (auto& c : centers) c *= scale;
    }

    std::vector<QuadraticClient> clients;
    clients.reserve(r.clients);
    for (auto& c : centers) clients.push_back({curvature, std::move(c), r.sigma});
    ParamVec x0 = ParamVec::Constant(d, r.init_offset / std::sqrt(static_cast<double>(d)));
    return QuadraticFamily(std::move(clients), std::move(x0));
}

QuadraticFamily make_spectral_family(const SpectralRecipe& r) {
    if (r.clients == 0 || r.dim == 0) throw UsageError("spectral recipe needs clients >= 1 and dim >= 1");
    if (!(r.smoothness > 0.0) || !(r.min_curvature > 0.0) || r.min_curvature > r.smoothness) {
        throw UsageError("spectral recipe needs 0 < min_curvature <= smoothness");
    }
    const auto d = static_cast<Eigen::Index>(r.dim);
    ParamVec diag(d);
    if (d == 1) {
        diag[0] = r.smoothness;
    } else {
        const double lo = std::log(r.min_curvature);
        const double hi = std::log(r.smoothness);
        for (Eigen::Index j = 0; j < d; ++j) {
            diag[j] = std::exp(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(d - 1));
        }
    }
    const Eigen::MatrixXd curvature = diag.asDiagonal();
    std::vector<QuadraticClient> clients(r.clients, {curvature, ParamVec::Zero(d), r.sigma});
    ParamVec x0 = r.init_scale * diag.cwiseSqrt().cwiseInverse();
    return QuadraticFamily(std::move(clients), std::move(x0));
}

// ---------------------------------------------------------------------------
// Constants

HeterogeneityConstants analytic_constants(const QuadraticFamily& family) {
    if (!family.shared_curvature()) {
        throw UsageError("closed-form constants need a shared curvature; use estimate_constants");
    }
    const std::size_t n = family.num_clients();
    const Eigen::MatrixXd& a = family.client(0).curvature;

    HeterogeneityConstants k;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    k.L = eig.eigenvalues().maxCoeff();

    ParamVec mean = ParamVec::Zero(family.dim());
    double sigma2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += family.client(i).center;
        sigma2 = std::max(sigma2, family.client(i).noise_sigma * family.client(i).noise_sigma);
    }
    mean /= static_cast<double>(n);
    double g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) g2 += (a * (family.client(i).center - mean)).squaredNorm();
    g2 /= static_cast<double>(n);

    k.sigma2 = sigma2;
    k.B = 1.0;
    k.G = std::sqrt(g2);
    return k;
}

std::vector<ParamVec> uniform_probes(Eigen::Index dim, std::size_t count, double lo, double hi,
                                     std::uint64_t seed) {
    Stream stream(seed, Purpose::probe);
    std::vector<ParamVec> probes(count, ParamVec(dim));
    for (auto& p : probes) {
        for (Eigen::Index j = 0; j < dim; ++j) p[j] = lo + (hi - lo) * stream.uniform();
    }
    return probes;
}

HeterogeneityConstants estimate_constants(const Objective& objective,
                                          const std::vector<ParamVec>& probes,
                                          std::size_t samples_per_point, std::uint64_t seed) {
    if (probes.size() < 10) throw EstimationError("estimate_constants needs at least 10 probe points");
    const bool degenerate = std::all_of(probes.begin(), probes.end(),
                                        [&](const ParamVec& p) { return p == probes.front(); });
    if (degenerate) throw EstimationError("probe points are all identical");

    const std::size_t n = objective.num_clients();
    const std::size_t m = probes.size();

    // Exact gradients at every probe, per client.
    std::vector<std::vector<ParamVec>> local(m);
    std::vector<double> s(m), y(m);
    for (std::size_t p = 0; p < m; ++p) {
        local[p].reserve(n);
        ParamVec mean = ParamVec::Zero(objective.dim());
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            local[p].push_back(objective.local_grad(i, probes[p]));
            mean += local[p].back();
            sq += local[p].back().squaredNorm();
        }
        mean /= static_cast<double>(n);
        s[p] = mean.squaredNorm();
        y[p] = sq / static_cast<double>(n);
    }

    HeterogeneityConstants k;

    // sigma^2: worst (probe, client) mean squared deviation.
    double sigma2 = 0.0;
    if (samples_per_point > 0) {
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t t = 0; t < samples_per_point; ++t) {
                    const StreamKey key{seed, static_cast<std::uint32_t>(p), 0,
                                        static_cast<std::uint32_t>(t)};
                    acc += (objective.stochastic_grad(i, probes[p], key) - local[p][i]).squaredNorm();
                }
                sigma2 = std::max(sigma2, acc / static_cast<double>(samples_per_point));
            }
        }
    }
    k.sigma2 = sigma2;

    // y = B^2 s + G^2 by least squares, then clamp B >= 1, G^2 >= 0.
    double s_mean = 0.0, y_mean = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
        s_mean += s[p];
        y_mean += y[p];
    }
    s_mean /= static_cast<double>(m);
    y_mean /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
        sxx += (s[p] - s_mean) * (s[p] - s_mean);
        sxy += (s[p] - s_mean) * (y[p] - y_mean);
    }
    double slope = sxx > 0.0 ? sxy / sxx : 1.0;
    double intercept = y_mean - slope * s_mean;
    if (slope < 1.0) {
        slope = 1.0;
        intercept = y_mean - s_mean;
    }
    k.B = std::sqrt(slope);
    k.G = std::sqrt(std::max(intercept, 0.0));

    // L: largest per-client gradient Lipschitz ratio over probe pairs.
    double lip = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = p + 1; q < m; ++q) {
            const double dx = (probes[p] - probes[q]).norm();
            if (dx == 0.0) continue;
            for (std::size_t i = 0; i < n; ++i) {
                lip = std::max(lip, (local[p][i] - local[q][i]).norm() / dx);
            }
        }
    }
    k.L = lip;
    return k;
}

}  // namespace splitlab
