#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitlab/dataset.hpp"
#include "splitlab/objectives.hpp"
#include "splitlab/split_mlp.hpp"

namespace splitlab {

enum class Algorithm { sl, fl, minibatch };
enum class OrderPolicy { random_per_round, fixed };

std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view s);

struct TrainConfig {
    Algorithm algorithm = Algorithm::sl;
    std::size_t n_clients = 1;
    std::size_t clients_per_round = 0;  // 0 means all N
    std::size_t local_steps = 1;        // K
    std::optional<double> local_epochs; // E; when set, tau_i = E * ceil(n_i / b)
    std::size_t batch_size = 1;
    double lr = 0.01;
    double global_lr = 1.0;
    std::size_t rounds = 1;
    std::uint64_t seed = 0;
    OrderPolicy order = OrderPolicy::random_per_round;
    double divergence_factor = 10.0;    // kappa
    bool keep_iterates = false;
    int threads = 1;                    // client-loop parallelism for FL / Minibatch

    std::size_t participants() const noexcept { return clients_per_round == 0 ? n_clients : clients_per_round; }

    /// Throws UsageError naming the first invalid field.
    void validate(std::size_t objective_clients) const;
};

/// Number of local steps client i runs in one round.
std::size_t local_steps_for(const TrainConfig& config, const Objective& objective, std::size_t client);

struct LocalResult {
    ParamVec x;
    std::vector<ParamVec> visited;  // iterate before each step, k = 0..K-1
};

/// K sequential SGD steps on f_i. Step k draws its gradient from key.with_step(k).
/// Throws DivergenceError (round = key.round) on a non-finite iterate.
LocalResult local_update(const ParamVec& x, const Objective& objective, std::size_t client, std::size_t steps,
                         double lr, const StreamKey& key);

struct RoundResult {
    ParamVec next;
    double drift = 0.0;                 // sum_i sum_{k<K} ||x_i^(r,k) - x^r||^2
    std::vector<std::size_t> order;     // clients in processing order
    std::size_t grad_evals = 0;
};

/// Clients taking part in round r, in processing order.
std::vector<std::size_t> sample_participants(const TrainConfig& config, std::size_t round);

RoundResult sl_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round);
RoundResult sl_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round,
                     std::span<const std::size_t> order);

RoundResult fl_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round);
RoundResult fl_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round,
                     std::span<const std::size_t> participants);

RoundResult minibatch_round(const ParamVec& x, const Objective& objective, const TrainConfig& config,
                            std::size_t round);

RoundResult run_round(const ParamVec& x, const Objective& objective, const TrainConfig& config, std::size_t round);

struct RoundRecord {
    std::size_t round = 0;
    double loss = 0.0;          // f(x^r)
    double grad_norm_sq = 0.0;  // ||grad f(x^r)||^2
    double drift = 0.0;
    bool diverged = false;
    std::size_t grad_evals = 0;
};

struct RunTrace {
    Algorithm algorithm = Algorithm::sl;
    std::uint64_t seed = 0;
    std::vector<RoundRecord> records;
    ParamVec initial;
    ParamVec final_iterate;      // x^R, or the last finite iterate on divergence
    ParamVec averaged_iterate;   // (1/R) sum_{r<R} x^r
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double averaged_grad_norm_sq = 0.0;
    std::optional<std::size_t> diverged_at;
    std::vector<ParamVec> iterates;  // x^0..x^{R-1} when keep_iterates

    bool diverged() const noexcept { return diverged_at.has_value(); }
};

/// R rounds of the configured algorithm from objective.initial_point().
RunTrace run_training(const Objective& objective, const TrainConfig& config);
RunTrace run_training(const Objective& objective, const TrainConfig& config, const ParamVec& x0);

/// Local update of a split model on client `client` of `objective`'s data:
/// per step, the split protocol yields both gradients and both halves step
/// with the same lr. Uses the same batch schedule as the monolithic oracle.
SplitMlp split_local_update(const SplitMlp& model, const MlpObjective& objective, std::size_t client,
                            std::size_t steps, double lr, const StreamKey& key);

}  // namespace splitlab
