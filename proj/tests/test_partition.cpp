#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <numeric>

#include "splitlab/partition.hpp"
#include "splitlab/types.hpp"

using namespace splitlab;

namespace {

std::vector<int> balanced(int classes, std::size_t per_class) {
    std::vector<int> y;
    for (std::size_t i = 0; i < per_class * static_cast<std::size_t>(classes); ++i) y.push_back(static_cast<int>(i % classes));
    return y;
}

// Brute-force disjoint-cover check independent of validate_partition.
bool covers(const Partition& p, std::size_t n) {
    std::vector<int> hits(n, 0);
    for (const auto& a : p.assignments) {
        if (a.empty()) return false;
        for (auto i : a) {
            if (i >= n) return false;
            ++hits[i];
        }
    }
    return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}

std::size_t distinct_classes(const Partition& p, std::size_t client, const std::vector<int>& y) {
    std::vector<int> seen;
    for (auto i : p.assignments[client]) seen.push_back(y[i]);
    std::sort(seen.begin(), seen.end());
    return static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
}

}  // namespace

TEST(Dirichlet, LargeAlphaIsNearUniform) {
    const auto y = balanced(10, 1000);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = partition_dirichlet(y, 10, 100.0, seed);
        for (std::size_t i = 0; i < 10; ++i) {
            const double n = static_cast<double>(p.assignments[i].size());
            for (std::size_t c = 0; c < 10; ++c) {
                EXPECT_NEAR(static_cast<double>(p.class_counts[i][c]) / n, 0.1, 0.1) << "seed " << seed;
            }
        }
    }
}

TEST(Dirichlet, SmallAlphaConcentrates) {
    const auto y = balanced(10, 200);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = partition_dirichlet(y, 10, 0.2, seed);
        int concentrated = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            auto counts = p.class_counts[i];
            std::sort(counts.begin(), counts.end(), std::greater<>());
            const double top2 = static_cast<double>(counts[0] + counts[1]);
            if (top2 > 0.5 * static_cast<double>(p.assignments[i].size())) ++concentrated;
        }
        EXPECT_GE(concentrated, 5) << "seed " << seed;
    }
}

TEST(Dirichlet, SingleClientTakesAll) {
    const auto y = balanced(3, 7);
    const auto p = partition_dirichlet(y, 1, 0.5, 1);
    ASSERT_EQ(p.num_clients(), 1u);
    EXPECT_EQ(p.assignments[0].size(), y.size());
}

TEST(Dirichlet, EveryClientNonEmptyEvenWhenTight) {
    const auto y = balanced(2, 3);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto p = partition_dirichlet(y, 6, 0.05, seed);
        EXPECT_TRUE(covers(p, y.size()));
    }
}

TEST(Dirichlet, Errors) {
    const auto y = balanced(2, 2);
    EXPECT_THROW(partition_dirichlet(y, 5, 1.0, 0), InfeasibleError);
    EXPECT_THROW(partition_dirichlet(y, 2, 0.0, 0), UsageError);
    EXPECT_THROW(partition_dirichlet(y, 0, 1.0, 0), UsageError);
    EXPECT_THROW(partition_dirichlet({0, -1}, 1, 1.0, 0), UsageError);
}

TEST(Classes, SixtyPerClient) {
    const auto y = balanced(10, 6000);
    const auto p = partition_classes(y, 1000, 2, 3);
    for (const auto& a : p.assignments) EXPECT_EQ(a.size(), 60u);
    EXPECT_TRUE(covers(p, y.size()));
}

TEST(Classes, AllClassesSingleClient) {
    const auto y = balanced(5, 4);
    const auto p = partition_classes(y, 1, 5, 0);
    EXPECT_EQ(distinct_classes(p, 0, y), 5u);
}

TEST(Classes, TwoClassShardsTenClients) {
    const auto y = balanced(10, 100);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = partition_classes(y, 10, 2, seed);
        int within = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            const auto k = distinct_classes(p, i, y);
            EXPECT_LE(k, 3u);
            within += k <= 2;
        }
        EXPECT_GE(within, 9);
    }
}

TEST(Classes, StraddlingShardsStayWithinCPlusOne) {
    // 7 classes of 13 samples into 9 * 2 shards: boundaries rarely align.
    const auto y = balanced(7, 13);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = partition_classes(y, 9, 2, seed);
        EXPECT_TRUE(covers(p, y.size()));
        std::size_t lo = y.size(), hi = 0;
        for (std::size_t i = 0; i < 9; ++i) {
            EXPECT_LE(distinct_classes(p, i, y), 3u);
            lo = std::min(lo, p.assignments[i].size());
            hi = std::max(hi, p.assignments[i].size());
        }
        // shard sizes differ by at most one, so client sizes by at most C
        EXPECT_LE(hi - lo, 2u);
    }
}

TEST(Classes, Errors) {
    const auto y = balanced(3, 2);
    EXPECT_THROW(partition_classes(y, 4, 2, 0), InfeasibleError);
    EXPECT_THROW(partition_classes(y, 1, 4, 0), UsageError);
    EXPECT_THROW(partition_classes(y, 1, 0, 0), UsageError);
}

TEST(Stats, UniformHundred) {
    const auto y = balanced(10, 10);
    const auto s = partition_stats(partition_classes(y, 10, 1, 0));
    for (double p : s.ratios) EXPECT_DOUBLE_EQ(p, 0.1);
    EXPECT_TRUE(s.ratios_sum_to_one());
    for (double h : s.entropy) EXPECT_DOUBLE_EQ(h, 0.0);
}

TEST(Stats, SingleClient) {
    const auto s = partition_stats(partition_iid(balanced(2, 5), 1, 0));
    ASSERT_EQ(s.ratios.size(), 1u);
    EXPECT_DOUBLE_EQ(s.ratios[0], 1.0);
    EXPECT_NEAR(s.entropy[0], std::log(2.0), 1e-15);
}

TEST(Stats, DirichletCountsSumToTotal) {
    const auto y = balanced(10, 50);
    const auto s = partition_stats(partition_dirichlet(y, 10, 0.2, 4));
    EXPECT_EQ(std::accumulate(s.sizes.begin(), s.sizes.end(), std::size_t{0}), y.size());
    EXPECT_EQ(s.total, y.size());
    EXPECT_TRUE(s.ratios_sum_to_one());
}

TEST(Property, DisjointCoverAndDeterminism) {
    const auto y = balanced(10, 30);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d1 = partition_dirichlet(y, 10, 0.5, seed);
        const auto c1 = partition_classes(y, 10, 2, seed);
        const auto i1 = partition_iid(y, 10, seed);
        EXPECT_TRUE(covers(d1, y.size()));
        EXPECT_TRUE(covers(c1, y.size()));
        EXPECT_TRUE(covers(i1, y.size()));
        EXPECT_EQ(d1.assignments, partition_dirichlet(y, 10, 0.5, seed).assignments);
        EXPECT_EQ(c1.assignments, partition_classes(y, 10, 2, seed).assignments);
        EXPECT_EQ(i1.assignments, partition_iid(y, 10, seed).assignments);
        EXPECT_NO_THROW(validate_partition(d1, y.size()));
    }
}

TEST(Property, EntropyNonincreasingAsAlphaShrinks) {
    const auto y = balanced(10, 100);
    double prev = 1e300;
    for (double alpha : {100.0, 5.0, 0.5, 0.2}) {
        double mean = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) mean += partition_stats(partition_dirichlet(y, 10, alpha, seed)).mean_entropy();
        mean /= 20.0;
        EXPECT_LE(mean, prev) << "alpha " << alpha;
        prev = mean;
    }
}

TEST(Validate, CatchesOverlapAndGaps) {
    Partition p;
    p.assignments = {{0, 1}, {1}};
    EXPECT_THROW(validate_partition(p, 2), UsageError);
    p.assignments = {{0}, {2}};
    EXPECT_THROW(validate_partition(p, 3), UsageError);
    p.assignments = {{0, 1}, {}};
    EXPECT_THROW(validate_partition(p, 2), UsageError);
}
