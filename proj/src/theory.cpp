#include "splitlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace splitlab {

namespace {

void check_constants(const HeterogeneityConstants& c) {
    if (!(c.L > 0.0)) throw UsageError("L must be > 0");
    if (!(c.B >= 1.0)) throw UsageError("B must be >= 1");
    if (!(c.G >= 0.0)) throw UsageError("G must be >= 0");
    if (!(c.sigma2 >= 0.0)) throw UsageError("sigma2 must be >= 0");
}

void check_counts(std::size_t N, std::size_t K) {
    if (N == 0 || K == 0) throw UsageError("N and K must be >= 1");
}

double dn(std::size_t v) { return static_cast<double>(v); }

}  // namespace

void BoundInputs::validate() const {
    check_constants(constants);
    check_counts(N, K);
    if (R == 0) throw UsageError("R must be >= 1");
    if (!(eta > 0.0)) throw UsageError("eta must be > 0");
    if (!(eta_g > 0.0)) throw UsageError("eta_g must be > 0");
    if (!(F >= 0.0)) throw UsageError("F must be >= 0");
}

double max_lr_sl(const HeterogeneityConstants& c, std::size_t N, std::size_t K) {
    check_constants(c);
    check_counts(N, K);
    return 1.0 / (2.0 * dn(N) * dn(K) * c.L * std::sqrt(2.0 * c.B * c.B + 1.0));
}

double max_lr_fl(const HeterogeneityConstants& c, std::size_t K, double eta_g) {
    check_constants(c);
    check_counts(1, K);
    if (!(eta_g > 0.0)) throw UsageError("eta_g must be > 0");
    return std::min(1.0 / std::sqrt(2.0 * c.B * c.B + 1.0), 1.0 / eta_g) / (2.0 * dn(K) * c.L);
}

double max_lr_drift(const HeterogeneityConstants& c, std::size_t N, std::size_t K) {
    check_constants(c);
    check_counts(N, K);
    return 1.0 / (2.0 * dn(N) * dn(K) * c.L);
}

double max_lr_one_client(const HeterogeneityConstants& c, std::size_t K) {
    check_constants(c);
    check_counts(1, K);
    return 1.0 / (2.0 * std::sqrt(5.0) * dn(K) * c.L);
}

double drift_bound(const HeterogeneityConstants& c, std::size_t N, std::size_t K, double eta, double grad_norm_sq) {
    check_constants(c);
    check_counts(N, K);
    if (!(eta >= 0.0)) throw UsageError("eta must be >= 0");
    if (!(grad_norm_sq >= 0.0)) throw UsageError("grad_norm_sq must be >= 0");
    const double n = dn(N), k = dn(K);
    const double e2 = eta * eta;
    const double denom = 1.0 - 4.0 * n * n * k * k * e2 * c.L * c.L;
    if (!(denom > 0.0)) {
        throw ConstraintError("drift bound needs 4 N^2 K^2 eta^2 L^2 < 1 (got " + std::to_string(1.0 - denom) + ")");
    }
    const double numer = 2.0 * n * n * n * k * k * e2 * c.sigma2 +
                         4.0 * n * n * n * k * k * k * e2 * (c.B * c.B * grad_norm_sq + c.G * c.G);
    return numer / denom;
}

BoundReport sl_bound(const BoundInputs& in) {
    in.validate();
    const auto& c = in.constants;
    const double n = dn(in.N), k = dn(in.K), r = dn(in.R), eta = in.eta;
    const double l2 = c.L * c.L;
    BoundReport out;
    out.t1_init = 4.0 * in.F / (eta * n * k * r);
    out.t2_drift = 12.0 * eta * eta * n * n * k * k * l2 * c.G * c.G + 6.0 * eta * eta * n * n * k * l2 * c.sigma2;
    out.t3_variance = 4.0 * eta * n * c.L * c.sigma2;
    out.total = out.t1_init + out.t2_drift + out.t3_variance;
    out.lr_max = max_lr_sl(c, in.N, in.K);
    out.lr_ok = eta <= out.lr_max;
    return out;
}

double sl_corollary_rate(double F, const HeterogeneityConstants& c, std::size_t N, std::size_t K, std::size_t R) {
    check_constants(c);
    check_counts(N, K);
    if (R == 0) throw UsageError("R must be >= 1");
    if (!(F >= 0.0)) throw UsageError("F must be >= 0");
    const double k = dn(K), r = dn(R), sr = std::sqrt(r);
    const double l2 = c.L * c.L;
    return 4.0 * F / sr + 12.0 * l2 * c.G * c.G / r + 6.0 * l2 * c.sigma2 / (k * r) + 4.0 * c.L * c.sigma2 / (k * sr);
}

BoundReport fl_bound(const BoundInputs& in) {
    in.validate();
    const auto& c = in.constants;
    const double n = dn(in.N), k = dn(in.K), r = dn(in.R), eta = in.eta, eg = in.eta_g;
    const double l2 = c.L * c.L;
    BoundReport out;
    out.t1_init = 4.0 * in.F / (k * eg * eta * r);
    out.t2_drift = 12.0 * k * (k - 1.0) * eta * eta * l2 * c.G * c.G + 6.0 * (k - 1.0) * eta * eta * l2 * c.sigma2;
    out.t3_variance = 4.0 * eg * eta * c.L * c.sigma2 / n;
    out.total = out.t1_init + out.t2_drift + out.t3_variance;
    out.lr_max = max_lr_fl(c, in.K, eg);
    out.lr_ok = eta <= out.lr_max;
    return out;
}

double one_client_bound(const BoundInputs& in) {
    in.validate();
    const auto& c = in.constants;
    const double n = dn(in.N), k = dn(in.K), r = dn(in.R), eta = in.eta;
    const double l2 = c.L * c.L, g2 = c.G * c.G;
    return 4.0 * in.F / (n * k * eta * r) + 40.0 * k * k * l2 * eta * eta * g2 + 10.0 * k * l2 * eta * eta * c.sigma2 +
           4.0 * c.L * eta * c.sigma2 + 4.0 * g2;
}

double effective_lr(Algorithm algorithm, std::size_t N, std::size_t K, double eta) {
    check_counts(N, K);
    switch (algorithm) {
        case Algorithm::fl: return dn(K) * eta;
        case Algorithm::sl: return dn(N) * dn(K) * eta;
        case Algorithm::minibatch: break;
    }
    throw UsageError("effective learning rate is defined for FL and SL only");
}

double lr_for_effective(Algorithm algorithm, std::size_t N, std::size_t K, double effective) {
    check_counts(N, K);
    switch (algorithm) {
        case Algorithm::fl: return effective / dn(K);
        case Algorithm::sl: return effective / (dn(N) * dn(K));
        case Algorithm::minibatch: break;
    }
    throw UsageError("effective learning rate is defined for FL and SL only");
}

double round_complexity(Algorithm algorithm, double F, const HeterogeneityConstants& c, std::size_t N,
                        std::size_t K, double epsilon) {
    check_counts(N, K);
    if (!(epsilon > 0.0)) throw UsageError("epsilon must be > 0");
    if (algorithm == Algorithm::minibatch) throw UsageError("round complexity is tabulated for FL and SL only");
    const double n = dn(N), k = dn(K), e2 = epsilon * epsilon;
    const double s4 = c.sigma2 * c.sigma2;
    const double variance = algorithm == Algorithm::fl ? s4 / (n * n * k * k * e2) : s4 / (k * k * e2);
    return F * F / e2 + variance + (k * c.G * c.G + c.sigma2) / (k * epsilon);
}

}  // namespace splitlab
