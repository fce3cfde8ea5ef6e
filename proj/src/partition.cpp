#include "splitlab/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "splitlab/rng.hpp"
#include "splitlab/types.hpp"

namespace splitlab {

std::size_t Partition::num_samples() const noexcept {
    std::size_t n = 0;
    for (const auto& a : assignments) n += a.size();
    return n;
}

int num_classes(const std::vector<int>& labels) {
    int c = 0;
    for (int y : labels) {
        if (y < 0) throw UsageError("labels must be nonnegative integers");
        c = std::max(c, y + 1);
    }
    return c;
}

namespace {

void check_feasible(const std::vector<int>& labels, std::size_t n_clients) {
    if (n_clients == 0) throw UsageError("n_clients must be >= 1");
    if (labels.empty()) throw InfeasibleError("no samples to partition");
    if (n_clients > labels.size()) {
        throw InfeasibleError("n_clients (" + std::to_string(n_clients) + ") exceeds sample count (" +
                              std::to_string(labels.size()) + ")");
    }
}

std::vector<std::vector<std::size_t>> indices_by_class(const std::vector<int>& labels, int classes) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    return by_class;
}

void repair_empty(std::vector<std::vector<std::size_t>>& assignments) {
    for (;;) {
        auto empty = std::find_if(assignments.begin(), assignments.end(),
                                  [](const auto& a) { return a.empty(); });
        if (empty == assignments.end()) return;
        auto largest = std::max_element(assignments.begin(), assignments.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
        empty->push_back(largest->back());
        largest->pop_back();
    }
}

Partition finish(std::vector<std::vector<std::size_t>> assignments, const std::vector<int>& labels,
                 std::uint64_t seed, std::string mechanism, std::map<std::string, double> params) {
    const int classes = num_classes(labels);
    Partition p;
    p.class_counts.assign(assignments.size(), std::vector<std::size_t>(static_cast<std::size_t>(classes), 0));
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        std::sort(assignments[i].begin(), assignments[i].end());
        for (std::size_t idx : assignments[i]) ++p.class_counts[i][static_cast<std::size_t>(labels[idx])];
    }
    p.assignments = std::move(assignments);
    p.seed = seed;
    p.mechanism = std::move(mechanism);
    p.params = std::move(params);
    return p;
}

}  // namespace

Partition partition_dirichlet(const std::vector<int>& labels, std::size_t n_clients, double alpha,
                              std::uint64_t seed) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw UsageError("alpha must be a positive finite number");
    check_feasible(labels, n_clients);
    const int classes = num_classes(labels);
    auto by_class = indices_by_class(labels, classes);

    std::vector<std::vector<std::size_t>> assignments(n_clients);
    for (int c = 0; c < classes; ++c) {
        Stream stream(StreamKey{seed, static_cast<std::uint32_t>(c), 0, 0}, Purpose::partition);
        std::gamma_distribution<double> gamma(alpha, 1.0);
        std::vector<double> weights(n_clients);
        double total = 0.0;
        for (auto& w : weights) {
            w = gamma(stream);
            total += w;
        }
        if (!(total > 0.0)) {
            // Every gamma draw underflowed (tiny alpha): put the class on one client.
            std::fill(weights.begin(), weights.end(), 0.0);
            weights[static_cast<std::size_t>(stream() % n_clients)] = 1.0;
        }
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        for (std::size_t idx : by_class[static_cast<std::size_t>(c)]) assignments[pick(stream)].push_back(idx);
    }
    repair_empty(assignments);
    return finish(std::move(assignments), labels, seed, "dirichlet", {{"alpha", alpha}});
}

Partition partition_iid(const std::vector<int>& labels, std::size_t n_clients, std::uint64_t seed) {
    check_feasible(labels, n_clients);
    Stream stream(seed, Purpose::partition);
    std::uniform_int_distribution<std::size_t> pick(0, n_clients - 1);
    std::vector<std::vector<std::size_t>> assignments(n_clients);
    for (std::size_t i = 0; i < labels.size(); ++i) assignments[pick(stream)].push_back(i);
    repair_empty(assignments);
    return finish(std::move(assignments), labels, seed, "iid", {});
}

Partition partition_classes(const std::vector<int>& labels, std::size_t n_clients,
                            std::size_t classes_per_client, std::uint64_t seed) {
    check_feasible(labels, n_clients);
    const int classes = num_classes(labels);
    if (classes_per_client < 1 || classes_per_client > static_cast<std::size_t>(classes)) {
        throw UsageError("classes_per_client must be in [1, number of classes]");
    }
    const std::size_t n = labels.size();
    const std::size_t shards = n_clients * classes_per_client;
    if (shards > n) {
        throw InfeasibleError("n_clients * C = " + std::to_string(shards) + " shards exceed " +
                              std::to_string(n) + " samples");
    }

    // Class-sorted order; within a class the order is a seeded shuffle.
    Stream stream(seed, Purpose::partition);
    auto by_class = indices_by_class(labels, classes);
    std::vector<std::size_t> order;
    order.reserve(n);
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), stream);
        order.insert(order.end(), members.begin(), members.end());
    }

    // Shard s covers [begin[s], begin[s+1]); sizes differ by at most one.
    std::vector<std::size_t> begin(shards + 1);
    const std::size_t base = n / shards, extra = n % shards;
    for (std::size_t s = 0; s < shards; ++s) begin[s + 1] = begin[s] + base + (s < extra ? 1 : 0);

    std::vector<std::size_t> straddling, pure;
    for (std::size_t s = 0; s < shards; ++s) {
        const bool mixed = labels[order[begin[s]]] != labels[order[begin[s + 1] - 1]];
        (mixed ? straddling : pure).push_back(s);
    }
    std::shuffle(straddling.begin(), straddling.end(), stream);
    std::shuffle(pure.begin(), pure.end(), stream);

    std::vector<std::size_t> clients(n_clients);
    std::iota(clients.begin(), clients.end(), 0);
    std::shuffle(clients.begin(), clients.end(), stream);

    // Round-robin dealing over a shuffled client order: straddling shards first,
    // so while there are at most n_clients of them each lands on a distinct client.
    std::vector<std::vector<std::size_t>> owned(n_clients);
    std::size_t slot = 0;
    auto deal = [&](std::size_t shard) {
        // Skip clients that already hold C shards.
        while (owned[clients[slot % n_clients]].size() >= classes_per_client) ++slot;
        owned[clients[slot % n_clients]].push_back(shard);
        ++slot;
    };
    for (std::size_t s : straddling) deal(s);
    for (std::size_t s : pure) deal(s);

    std::vector<std::vector<std::size_t>> assignments(n_clients);
    for (std::size_t i = 0; i < n_clients; ++i) {
        for (std::size_t s : owned[i]) {
            for (std::size_t k = begin[s]; k < begin[s + 1]; ++k) assignments[i].push_back(order[k]);
        }
    }
    return finish(std::move(assignments), labels, seed, "classes",
                  {{"classes_per_client", static_cast<double>(classes_per_client)}});
}

bool PartitionStats::ratios_sum_to_one() const noexcept {
    return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == total && total > 0;
}

double PartitionStats::mean_entropy() const noexcept {
    if (entropy.empty()) return 0.0;
    return std::accumulate(entropy.begin(), entropy.end(), 0.0) / static_cast<double>(entropy.size());
}

PartitionStats partition_stats(const Partition& p) {
    PartitionStats s;
    s.total = p.num_samples();
    for (std::size_t i = 0; i < p.num_clients(); ++i) {
        const std::size_t ni = p.assignments[i].size();
        s.sizes.push_back(ni);
        s.ratios.push_back(s.total ? static_cast<double>(ni) / static_cast<double>(s.total) : 0.0);
        double h = 0.0;
        std::size_t touched = 0;
        if (i < p.class_counts.size()) {
            for (std::size_t count : p.class_counts[i]) {
                if (count == 0) continue;
                ++touched;
                const double q = static_cast<double>(count) / static_cast<double>(ni);
                h -= q * std::log(q);
            }
        }
        s.entropy.push_back(h);
        s.classes_touched.push_back(touched);
    }
    return s;
}

void validate_partition(const Partition& p, std::size_t n_samples) {
    std::vector<char> seen(n_samples, 0);
    for (std::size_t i = 0; i < p.num_clients(); ++i) {
        if (p.assignments[i].empty()) throw UsageError("client " + std::to_string(i) + " has no samples");
        for (std::size_t idx : p.assignments[i]) {
            if (idx >= n_samples) throw UsageError("sample index " + std::to_string(idx) + " out of range");
            if (seen[idx]) throw UsageError("sample " + std::to_string(idx) + " assigned twice");
            seen[idx] = 1;
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw UsageError("partition does not cover all samples");
}

}  // namespace splitlab
