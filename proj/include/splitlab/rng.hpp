#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace splitlab {

/// Philox4x32-10 block function (Salmon, Moraes, Dror, Shaw; SC 2011).
/// Maps a 128-bit counter and 64-bit key to 128 pseudo-random bits.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key) noexcept;
};

/// Independent stream families. Each family gets its own key so that, e.g.,
/// client ordering and gradient noise never share random bits.
enum class Purpose : std::uint32_t {
    gradient = 1,
    order = 2,
    batch = 3,
    partition = 4,
    generator = 5,
    init = 6,
    probe = 7,
    sampling = 8,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Per-run seed derived from a master seed and a run index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Coordinates of one stochastic draw: (run seed, round, client, step).
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t round = 0;
    std::uint32_t client = 0;
    std::uint32_t step = 0;

    StreamKey with_client(std::uint32_t c) const noexcept { return {seed, round, c, step}; }
    StreamKey with_step(std::uint32_t s) const noexcept { return {seed, round, client, s}; }
};

/// Counter-based stream over Philox: the counter is (round, client, step, block)
/// and the key is (seed, purpose). Satisfies UniformRandomBitGenerator, so the
/// standard <random> distributions can draw from it. Cheap to construct; any
/// stream can be re-created from its coordinates alone.
class Stream {
public:
    using result_type = std::uint32_t;

    Stream(const StreamKey& key, Purpose purpose) noexcept;
    Stream(std::uint64_t seed, Purpose purpose) noexcept : Stream(StreamKey{seed, 0, 0, 0}, purpose) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;

private:
    Philox4x32::Key key_{};
    Philox4x32::Counter counter_{};
    Philox4x32::Counter buffer_{};
    unsigned used_ = 4;
};

}  // namespace splitlab
