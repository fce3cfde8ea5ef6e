#pragma once

#include <cstddef>

#include "splitlab/engine.hpp"
#include "splitlab/objectives.hpp"

namespace splitlab {

/// Inputs shared by the round-complexity bounds. F = f(x^0) - f(x*).
/// For FL, `eta` is the local learning rate and `eta_g` the global one.
struct BoundInputs {
    HeterogeneityConstants constants;
    std::size_t N = 1;
    std::size_t K = 1;
    std::size_t R = 1;
    double eta = 0.0;
    double eta_g = 1.0;
    double F = 0.0;

    void validate() const;
};

/// Terms of a convergence bound on E||grad f(xbar^R)||^2.
/// Invariants: total == t1_init + t2_drift + t3_variance and lr_ok == (eta <= lr_max).
struct BoundReport {
    double t1_init = 0.0;
    double t2_drift = 0.0;
    double t3_variance = 0.0;
    double total = 0.0;
    bool lr_ok = false;
    double lr_max = 0.0;
};

/// SL step-size condition: eta <= 1 / (2 N K L sqrt(2 B^2 + 1)).
double max_lr_sl(const HeterogeneityConstants& c, std::size_t N, std::size_t K);

/// FL local step-size condition: eta_l <= 1/(2 K L) * min(1/sqrt(2 B^2 + 1), 1/eta_g).
double max_lr_fl(const HeterogeneityConstants& c, std::size_t K, double eta_g);

/// Condition of the drift lemma: eta <= 1 / (2 N K L).
double max_lr_drift(const HeterogeneityConstants& c, std::size_t N, std::size_t K);

/// Condition of the one-client progress bound: eta <= 1 / (2 sqrt(5) K L).
double max_lr_one_client(const HeterogeneityConstants& c, std::size_t K);

/// Upper bound on sum_i sum_{k<K} E||x_i^(r,k) - x^r||^2 for SL:
///   [2 N^3 K^2 eta^2 sigma^2 + 4 N^3 K^3 eta^2 (B^2 ||grad f(x^r)||^2 + G^2)] / (1 - 4 N^2 K^2 eta^2 L^2)
/// Throws ConstraintError when the denominator is not positive.
double drift_bound(const HeterogeneityConstants& c, std::size_t N, std::size_t K, double eta, double grad_norm_sq);

/// SL: 4F/(eta N K R) + [12 eta^2 N^2 K^2 L^2 G^2 + 6 eta^2 N^2 K L^2 sigma^2] + 4 eta N L sigma^2.
/// Evaluated even when the step-size condition fails (lr_ok = false).
BoundReport sl_bound(const BoundInputs& in);

/// sl_bound with eta = 1/(N K sqrt(R)) substituted, constants kept:
///   4F/sqrt(R) + 12 L^2 G^2 / R + 6 L^2 sigma^2 / (K R) + 4 L sigma^2 / (K sqrt(R)).
double sl_corollary_rate(double F, const HeterogeneityConstants& c, std::size_t N, std::size_t K, std::size_t R);

/// FL: 4F/(K eta_g eta_l R) + [12 K (K-1) eta_l^2 L^2 G^2 + 6 (K-1) eta_l^2 L^2 sigma^2] + 4 eta_g eta_l L sigma^2 / N.
BoundReport fl_bound(const BoundInputs& in);

/// Progress of one client in one round (per-client dissimilarity):
///   4F/(N K eta R) + 40 K^2 L^2 eta^2 G^2 + 10 K L^2 eta^2 sigma^2 + 4 L eta sigma^2 + 4 G^2.
/// The 4 G^2 floor survives eta -> 0.
double one_client_bound(const BoundInputs& in);

/// K eta for FL, N K eta for SL. Minibatch SGD has no effective-lr definition.
double effective_lr(Algorithm algorithm, std::size_t N, std::size_t K, double eta);

/// Inverse of effective_lr.
double lr_for_effective(Algorithm algorithm, std::size_t N, std::size_t K, double effective);

/// Rounds to reach eps with every hidden constant set to 1. Meaningful only
/// for orderings and ratios between algorithms.
///   FL: F^2/eps^2 + sigma^4/(N^2 K^2 eps^2) + (K G^2 + sigma^2)/(K eps)
///   SL: F^2/eps^2 + sigma^4/(K^2 eps^2)     + (K G^2 + sigma^2)/(K eps)
double round_complexity(Algorithm algorithm, double F, const HeterogeneityConstants& c, std::size_t N,
                        std::size_t K, double epsilon);

}  // namespace splitlab
