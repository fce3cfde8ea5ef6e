#include "splitlab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "splitlab/parallel.hpp"

namespace splitlab {

std::string_view to_string(Algorithm a) noexcept {
    switch (a) {
        case Algorithm::sl: return "sl";
        case Algorithm::fl: return "fl";
        case Algorithm::minibatch: return "minibatch";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view s) {
    if (s == "sl" || s == "SL") return Algorithm::sl;
    if (s == "fl" || s == "FL" || s == "fedavg") return Algorithm::fl;
    if (s == "minibatch" || s == "mb" || s == "minibatch_sgd") return Algorithm::minibatch;
    throw UsageError("unknown algorithm '" + std::string(s) + "' (expected sl, fl or minibatch)");
}

void TrainConfig::validate(std::size_t objective_clients) const {
    if (n_clients == 0) throw UsageError("n_clients must be >= 1");
    if (n_clients != objective_clients) {
        throw UsageError("n_clients = " + std::to_string(n_clients) + " but the objective has " +
                         std::to_string(objective_clients) + " clients");
    }
    if (clients_per_round > n_clients) throw UsageError("clients_per_round must satisfy 1 <= S <= N");
    if (local_steps == 0 && !local_epochs) throw UsageError("local_steps must be >= 1");
    if (local_epochs && !(*local_epochs > 0.0)) throw UsageError("local_epochs must be > 0");
    if (batch_size == 0) throw UsageError("batch_size must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw UsageError("lr must be a finite number >= 0");
    if (!(global_lr >= 0.0) || !std::isfinite(global_lr)) throw UsageError("global_lr must be a finite number >= 0");
    if (rounds == 0) throw UsageError("rounds must be >= 1");
    if (!(divergence_factor > 1.0)) throw UsageError("divergence_factor must be > 1");
}

std::size_t local_steps_for(const TrainConfig& config, const Objective& objective, std::size_t client) {
    if (!config.local_epochs) return config.local_steps;
    const double tau = *config.local_epochs * static_cast<double>(objective.batches_per_epoch(client));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(tau)));
}

namespace {

// K local steps from `start`. Adds sum_k ||x_k - reference||^2 into *drift.
ParamVec run_local(const ParamVec& start, const Objective& objective, std::size_t client, std::size_t steps,
                   double lr, StreamKey key, const ParamVec& reference, double* drift,
                   std::vector<ParamVec>* visited) {
    key.client = static_cast<std::uint32_t>(client);
    ParamVec cur = start;
    for (std::size_t k = 0; k < steps; ++k) {
        if (visited) visited->push_back(cur);
        if (drift) *drift += (cur - reference).squaredNorm();
        ParamVec next = cur - lr * objective.stochastic_grad(client, cur, key.with_step(static_cast<std::uint32_t>(k)));
        if (!next.allFinite()) throw DivergenceError(cur, key.round, k);
        cur = std::move(next);
    }
    return cur;
}

ParamVec apply_global_lr(const ParamVec& x, ParamVec out, double global_lr) {
    if (global_lr == 1.0) return out;
    return x + global_lr * (out - x);
}

}  // namespace

LocalResult local_update(const ParamVec& x, const Objective& objective, std::size_t client, std::size_t steps,
                         double lr, const StreamKey& key) {
    LocalResult r;
    r.visited.reserve(steps);
    r.x = run_local(x, objective, client, steps, lr, key, x, nullptr, &r.visited);
    return r;
}

std::vector<std::size_t> sample_participants(const TrainConfig& config, std::size_t round) {
    std::vector<std::size_t> all(config.n_clients);
    std::iota(all.begin(), all.end(), 0);
    const std::size_t s = config.participants();
    if (config.order == OrderPolicy::fixed) {
        all.resize(s);
        return all;
    }
    Stream stream(StreamKey{config.seed, static_cast<std::uint32_t>(round), 0, 0}, Purpose::order);
    std::shuffle(all.begin(), all.end(), stream);
    all.resize(s);
    return all;
}

RoundResult sl_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round) {
    const auto order = sample_participants(config, round);
    return sl_round(x, objective, config, round, order);
}

RoundResult sl_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round,
                     std::span<const std::size_t> order) {
    RoundResult out;
    out.order.assign(order.begin(), order.end());
    const StreamKey key{config.seed, static_cast<std::uint32_t>(round), 0, 0};
    ParamVec cur = x;
    for (std::size_t client : order) {
        const std::size_t steps = local_steps_for(config, objective, client);
        cur = run_local(cur, objective, client, steps, config.lr, key, x, &out.drift, nullptr);
        out.grad_evals += steps;
    }
    out.next = apply_global_lr(x, std::move(cur), config.global_lr);
    return out;
}

RoundResult fl_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round) {
    const auto participants = sample_participants(config, round);
    return fl_round(x, objective, config, round, participants);
}

RoundResult fl_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round,
                     std::span<const std::size_t> participants) {
    const std::size_t s = participants.size();
    if (s == 0) throw UsageError("fl_round needs at least one participant");
    const StreamKey key{config.seed, static_cast<std::uint32_t>(round), 0, 0};

    std::vector<ParamVec> outputs(s);
    std::vector<double> drifts(s, 0.0);
    std::vector<std::size_t> steps(s);
    parallel_for(s, config.threads, [&](std::size_t j) {
        const std::size_t client = participants[j];
        steps[j] = local_steps_for(config, objective, client);
        outputs[j] = run_local(x, objective, client, steps[j], config.lr, key, x, &drifts[j], nullptr);
    });

    const auto counts = objective.sample_counts();
    RoundResult out;
    out.order.assign(participants.begin(), participants.end());
    ParamVec weighted = ParamVec::Zero(x.size());
    double total_weight = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
        const double w = counts.empty() ? 1.0 : static_cast<double>(counts[participants[j]]);
        weighted += w * outputs[j];
        total_weight += w;
        out.drift += drifts[j];
        out.grad_evals += steps[j];
    }
    out.next = apply_global_lr(x, weighted / total_weight, config.global_lr);
    return out;
}

RoundResult minibatch_round(const ParamVec& x, const Objective& objective, const TrainConfig& config,
                            std::size_t round) {
    const std::size_t n = objective.num_clients();
    const std::size_t k = config.local_steps;
    const StreamKey key{config.seed, static_cast<std::uint32_t>(round), 0, 0};

    std::vector<ParamVec> partial(n);
    parallel_for(n, config.threads, [&](std::size_t i) {
        ParamVec sum = ParamVec::Zero(x.size());
        StreamKey ck = key;
        ck.client = static_cast<std::uint32_t>(i);
        for (std::size_t t = 0; t < k; ++t) sum += objective.stochastic_grad(i, x, ck.with_step(static_cast<std::uint32_t>(t)));
        partial[i] = std::move(sum);
    });
    ParamVec total = ParamVec::Zero(x.size());
    for (const auto& p : partial) total += p;

    RoundResult out;
    out.order.resize(n);
    std::iota(out.order.begin(), out.order.end(), 0);
    out.grad_evals = n * k;
    out.next = x - config.lr * total / static_cast<double>(n * k);
    if (!out.next.allFinite()) throw DivergenceError(x, round, 0);
    return out;
}

RoundResult run_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round) {
    switch (config.algorithm) {
        case Algorithm::sl: return sl_round(x, objective, config, round);
        case Algorithm::fl: return fl_round(x, objective, config, round);
        case Algorithm::minibatch: return minibatch_round(x, objective, config, round);
    }
    throw UsageError("unknown algorithm");
}

RunTrace run_training(const Objective& objective, const TrainConfig& config) {
    return run_training(objective, config, objective.initial_point());
}

RunTrace run_training(const Objective& objective, const TrainConfig& config, const ParamVec& x0) {
    config.validate(objective.num_clients());
    if (x0.size() != objective.dim()) throw UsageError("initial point has wrong dimension");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    RunTrace trace;
    trace.algorithm = config.algorithm;
    trace.seed = config.seed;
    trace.initial = x0;
    trace.initial_loss = global_loss(objective, x0);
    trace.records.reserve(config.rounds);
    const double limit = trace.initial_loss > 0.0 ? config.divergence_factor * trace.initial_loss
                                                  : std::numeric_limits<double>::infinity();
    auto dead = [&](double loss) { return !std::isfinite(loss) || loss > limit; };

    ParamVec x = x0;
    ParamVec sum = ParamVec::Zero(x0.size());
    std::size_t summed = 0;
    for (std::size_t r = 0; r < config.rounds; ++r) {
        RoundRecord rec;
        rec.round = r;
        rec.loss = global_loss(objective, x);
        rec.grad_norm_sq = global_grad(objective, x).squaredNorm();
        if (dead(rec.loss)) {
            trace.diverged_at = r;
            rec.diverged = true;
            trace.records.push_back(rec);
            break;
        }
        sum += x;
        ++summed;
        if (config.keep_iterates) trace.iterates.push_back(x);
        try {
            RoundResult rr = run_round(x, objective, config, r);
            rec.drift = rr.drift;
            rec.grad_evals = rr.grad_evals;
            x = std::move(rr.next);
        } catch (const DivergenceError& e) {
            x = e.last_finite();
            trace.diverged_at = r;
            rec.diverged = true;
            rec.drift = nan;
            trace.records.push_back(rec);
            break;
        }
        trace.records.push_back(rec);
    }
    if (trace.diverged_at) {
        for (std::size_t r = trace.records.size(); r < config.rounds; ++r) {
            trace.records.push_back({r, nan, nan, nan, true, 0});
        }
    }

    trace.final_iterate = x;
    trace.final_loss = global_loss(objective, x);
    if (!trace.diverged_at && dead(trace.final_loss)) trace.diverged_at = config.rounds;
    trace.averaged_iterate = summed ? ParamVec(sum / static_cast<double>(summed)) : x0;
    trace.averaged_grad_norm_sq =
        trace.diverged_at ? nan : global_grad(objective, trace.averaged_iterate).squaredNorm();
    return trace;
}

SplitMlp split_local_update(const SplitMlp& model, const MlpObjective& objective, std::size_t client,
                            std::size_t steps, double lr, const StreamKey& key) {
    if (client >= objective.num_clients()) throw UsageError("client index out of range");
    SplitMlp cur = model;
    for (std::size_t k = 0; k < steps; ++k) {
        StreamKey sk = key;
        sk.client = static_cast<std::uint32_t>(client);
        sk.step = static_cast<std::uint32_t>(k);
        const auto idx = objective.batch_indices(client, sk);
        const auto features = objective.train().rows(idx);
        const auto labels = objective.train().labels_of(idx);
        const SplitStep step = split_forward_backward(cur, features, labels);
        ParamVec next_client = cur.client_params - lr * step.client_grad;
        ParamVec next_server = cur.server_params - lr * step.server_grad;
        if (!next_client.allFinite() || !next_server.allFinite()) throw DivergenceError(cur.full(), key.round, k);
        cur.client_params = std::move(next_client);
        cur.server_params = std::move(next_server);
    }
    return cur;
}

}  // namespace splitlab
