#include "splitlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "splitlab/parallel.hpp"
#include "splitlab/theory.hpp"

namespace splitlab {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

MeanStderr mean_stderr(std::span<const double> v) {
    if (v.empty()) throw UsageError("mean of an empty sample");
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    if (v.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

double measure_drift(const RunTrace& trace, std::size_t round) {
    if (round >= trace.records.size()) throw UsageError("round " + std::to_string(round) + " is not in the trace");
    const auto& rec = trace.records[round];
    if (rec.diverged || !std::isfinite(rec.drift)) throw UsageError("round " + std::to_string(round) + " diverged");
    return rec.drift;
}

double averaged_grad_norm(const Objective& objective, const RunTrace& trace) {
    if (trace.diverged()) throw UsageError("averaged gradient norm of a diverged run");
    return global_grad(objective, trace.averaged_iterate).squaredNorm();
}

std::optional<std::size_t> rounds_to_epsilon(const RunTrace& trace, double f_star, double epsilon) {
    for (const auto& rec : trace.records) {
        if (rec.diverged) return std::nullopt;
        if (rec.loss - f_star <= epsilon) return rec.round;
    }
    if (!trace.diverged() && trace.final_loss - f_star <= epsilon) return trace.records.size();
    return std::nullopt;
}

DriftLemmaReport check_drift_lemma(const Objective& objective, const HeterogeneityConstants& constants,
                                   const TrainConfig& config, std::size_t seeds, int threads) {
    if (config.algorithm != Algorithm::sl) throw UsageError("drift lemma applies to SL runs");
    if (seeds == 0) throw UsageError("need at least one seed");
    if (config.local_epochs) throw UsageError("drift lemma needs a uniform K");
    const std::size_t n = config.participants();
    const std::size_t k = config.local_steps;
    const double lr_max = max_lr_drift(constants, n, k);
    if (config.lr > lr_max) {
        throw ConstraintError("lr " + std::to_string(config.lr) + " exceeds 1/(2NKL) = " + std::to_string(lr_max));
    }

    std::vector<std::uint64_t> seed_list(seeds);
    for (std::size_t s = 0; s < seeds; ++s) seed_list[s] = derive_seed(config.seed, s);
    const auto traces = run_ensemble(objective, config, seed_list, threads);

    DriftLemmaReport out;
    out.seeds = seeds;
    std::vector<double> drift(seeds), grad(seeds);
    for (std::size_t r = 0; r < config.rounds; ++r) {
        for (std::size_t s = 0; s < seeds; ++s) {
            drift[s] = measure_drift(traces[s], r);
            grad[s] = traces[s].records[r].grad_norm_sq;
        }
        const auto d = mean_stderr(drift);
        const double g = mean_stderr(grad).mean;
        const double b = drift_bound(constants, n, k, config.lr, g);
        out.measured_mean.push_back(d.mean);
        out.measured_stderr.push_back(d.stderr_);
        out.grad_norm_sq_mean.push_back(g);
        out.bound.push_back(b);
        if (d.mean > b) ++out.violations;
    }
    return out;
}

bool SweepResult::all_diverged() const {
    return std::all_of(diverged.begin(), diverged.end(), [](bool d) { return d; });
}

std::string SweepResult::threshold_label() const {
    std::ostringstream s;
    if (threshold_lr) {
        s << *threshold_lr;
    } else {
        s << "above " << (grid.empty() ? 0.0 : grid.back());
    }
    return s.str();
}

std::optional<double> SweepResult::best_metric() const {
    if (!best_lr) return std::nullopt;
    const auto it = std::find(grid.begin(), grid.end(), *best_lr);
    return metric[static_cast<std::size_t>(it - grid.begin())];
}

double sweep_metric(const Objective& objective, const RunTrace& trace) {
    if (trace.diverged()) return kNaN;
    if (auto acc = objective.accuracy(trace.final_iterate)) return *acc;
    const std::size_t rounds = trace.records.size();
    const std::size_t tail = std::max<std::size_t>(1, (rounds + 9) / 10);
    double sum = trace.final_loss;
    for (std::size_t r = rounds - tail + 1; r < rounds; ++r) sum += trace.records[r].loss;
    return sum / static_cast<double>(tail);
}

SweepResult lr_sweep(const Objective& objective, const TrainConfig& base, std::span<const double> grid,
                     std::span<const std::uint64_t> seeds, int threads) {
    if (grid.empty()) throw UsageError("lr grid is empty");
    if (seeds.empty()) throw UsageError("need at least one seed");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw UsageError("lr grid values must be > 0");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw UsageError("lr grid must be sorted ascending");
    }
    base.validate(objective.num_clients());

    const std::size_t g = grid.size(), s = seeds.size();
    std::vector<double> metric(g * s);
    std::vector<char> dead(g * s);
    parallel_for(g * s, threads, [&](std::size_t job) {
        TrainConfig c = base;
        c.lr = grid[job / s];
        c.seed = seeds[job % s];
        c.threads = 1;
        const RunTrace t = run_training(objective, c);
        dead[job] = t.diverged();
        metric[job] = sweep_metric(objective, t);
    });

    SweepResult out;
    out.grid.assign(grid.begin(), grid.end());
    out.higher_is_better = static_cast<bool>(objective.accuracy(objective.initial_point()));
    out.metric_name = out.higher_is_better ? "accuracy" : "loss";
    for (std::size_t i = 0; i < g; ++i) {
        bool any = false;
        for (std::size_t j = 0; j < s; ++j) any = any || dead[i * s + j];
        out.diverged.push_back(any);
        if (any) {
            out.metric.push_back(kNaN);
            out.metric_stderr.push_back(kNaN);
            if (!out.threshold_lr) out.threshold_lr = grid[i];
            continue;
        }
        const auto ms = mean_stderr(std::span<const double>(metric).subspan(i * s, s));
        out.metric.push_back(ms.mean);
        out.metric_stderr.push_back(ms.stderr_);
        if (!out.best_lr) {
            out.best_lr = grid[i];
            continue;
        }
        const double best = *out.best_metric();
        if (out.higher_is_better ? ms.mean > best : ms.mean < best) out.best_lr = grid[i];
    }
    return out;
}

double fit_rate_exponent(std::span<const std::pair<double, double>> points) {
    if (points.size() < 4) throw UsageError("rate fit needs at least 4 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [r, m] : points) {
        if (!(r > 0.0) || !(m > 0.0)) throw UsageError("rate fit needs positive R and metric values");
        const double x = std::log(r), y = std::log(m);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0)) throw UsageError("rate fit needs at least two distinct R values");
    return (n * sxy - sx * sy) / den;
}

}  // namespace splitlab
