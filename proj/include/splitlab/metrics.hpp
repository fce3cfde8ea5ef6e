#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "splitlab/engine.hpp"
#include "splitlab/objectives.hpp"

namespace splitlab {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  // sample standard deviation / sqrt(n); 0 for n = 1
};

/// Throws UsageError on an empty sample.
MeanStderr mean_stderr(std::span<const double> values);

/// Drift recorded for round r. Throws UsageError if r is out of range or diverged.
double measure_drift(const RunTrace& trace, std::size_t round);

/// ||grad f(xbar^R)||^2 at the stored averaged iterate. Throws UsageError on a
/// diverged trace.
double averaged_grad_norm(const Objective& objective, const RunTrace& trace);

/// First round r with f(x^r) - f_star <= epsilon (R if only x^R qualifies),
/// nullopt if never reached or the run diverged first.
std::optional<std::size_t> rounds_to_epsilon(const RunTrace& trace, double f_star, double epsilon);

struct DriftLemmaReport {
    std::vector<double> measured_mean;    // per round, mean over seeds
    std::vector<double> measured_stderr;
    std::vector<double> grad_norm_sq_mean;
    std::vector<double> bound;            // drift_bound at grad_norm_sq_mean
    std::size_t violations = 0;
    std::size_t seeds = 0;
};

/// Runs SL over `seeds` seeds derived from config.seed and compares the
/// seed-mean drift of every round to drift_bound at that round's seed-mean
/// ||grad f(x^r)||^2 (the bound is affine in it, so this bounds the mean).
/// Refuses with ConstraintError unless lr <= 1/(2 N K L).
DriftLemmaReport check_drift_lemma(const Objective& objective, const HeterogeneityConstants& constants,
                                   const TrainConfig& config, std::size_t seeds, int threads = 1);

/// Learning rates used for the best / threshold tables.
inline constexpr std::array<double, 6> default_lr_grid{0.0005, 0.001, 0.005, 0.01, 0.05, 0.1};

struct SweepResult {
    std::vector<double> grid;
    std::vector<double> metric;         // seed mean; NaN where diverged
    std::vector<double> metric_stderr;
    std::vector<bool> diverged;         // any seed diverged at this lr
    std::optional<double> best_lr;
    std::optional<double> threshold_lr; // nullopt: above grid max
    std::string metric_name;            // "loss" or "accuracy"
    bool higher_is_better = false;

    bool all_diverged() const;
    /// The threshold as a number, or "above <grid max>".
    std::string threshold_label() const;
    std::optional<double> best_metric() const;
};

/// Sweep metric of one run: mean held-out accuracy of the final iterate for
/// objectives that report accuracy, otherwise the mean of f over the last 10%
/// of rounds (f(x^{r+1}) for the last ceil(R/10) rounds).
double sweep_metric(const Objective& objective, const RunTrace& trace);

/// One run per (lr, seed), fanned out over `threads`. Grid must be sorted
/// ascending and positive.
SweepResult lr_sweep(const Objective& objective, const TrainConfig& base, std::span<const double> grid,
                     std::span<const std::uint64_t> seeds, int threads = 1);

/// Least-squares slope of log(metric) against log(R). Needs >= 4 points with
/// positive R and metric.
double fit_rate_exponent(std::span<const std::pair<double, double>> points);

}  // namespace splitlab
