#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace splitlab {

/// Assignment of sample indices to clients.
///
/// Invariants: assignments are disjoint, cover 0..n-1, and every client holds
/// at least one sample. class_counts[i][c] tallies class c at client i.
struct Partition {
    std::vector<std::vector<std::size_t>> assignments;
    std::vector<std::vector<std::size_t>> class_counts;
    std::uint64_t seed = 0;
    std::string mechanism;
    std::map<std::string, double> params;

    std::size_t num_clients() const noexcept { return assignments.size(); }
    std::size_t num_samples() const noexcept;
};

/// Per class, draw client proportions from Dir(alpha * 1) and allocate that
/// class's samples to clients by independent categorical draws. Empty clients
/// are repaired by moving one sample from the currently largest client.
Partition partition_dirichlet(const std::vector<int>& labels, std::size_t n_clients, double alpha,
                              std::uint64_t seed);

/// Shard mechanism: sort indices by class, cut them into n_clients * C
/// near-equal shards and deal C shards to each client. Shards that straddle a
/// class boundary go to distinct clients first, so no client sees more than
/// C + 1 classes.
Partition partition_classes(const std::vector<int>& labels, std::size_t n_clients,
                            std::size_t classes_per_client, std::uint64_t seed);

/// Every sample to a uniformly random client, then the same empty-client repair.
Partition partition_iid(const std::vector<int>& labels, std::size_t n_clients, std::uint64_t seed);

struct PartitionStats {
    std::vector<std::size_t> sizes;      // n_i
    std::size_t total = 0;               // n
    std::vector<double> ratios;          // p_i = n_i / n
    std::vector<double> entropy;         // class entropy per client, nats
    std::vector<std::size_t> classes_touched;

    /// sum_i n_i == n, checked on the integer counts.
    bool ratios_sum_to_one() const noexcept;
    double mean_entropy() const noexcept;
};

PartitionStats partition_stats(const Partition& p);

/// Throws if assignments are not a disjoint cover of 0..n_samples-1 or a client is empty.
void validate_partition(const Partition& p, std::size_t n_samples);

int num_classes(const std::vector<int>& labels);

}  // namespace splitlab
