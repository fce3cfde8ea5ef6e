#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace splitlab {

struct RunTrace;
struct TrainConfig;
class Objective;

inline bool in_parallel_region() noexcept {
#if defined(_OPENMP)
    return omp_in_parallel() != 0;
#else
    return false;
#endif
}

/// Runs f(i) for i in [0, n). Uses an OpenMP team when threads > 1 and we are
/// not already inside a parallel region; otherwise runs the plain serial loop.
/// The first exception by index is rethrown after all iterations finish.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    if (threads <= 1 || n <= 1 || in_parallel_region()) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// One training run per seed, fanned out over `threads`. Each run owns its
/// state, so the result is identical to run_ensemble_serial.
std::vector<RunTrace> run_ensemble(const Objective& objective, const TrainConfig& base,
                                   std::span<const std::uint64_t> seeds, int threads);

/// Serial reference for run_ensemble.
std::vector<RunTrace> run_ensemble_serial(const Objective& objective, const TrainConfig& base,
                                          std::span<const std::uint64_t> seeds);

}  // namespace splitlab
