#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace margex {

// Serial reference vs OpenMP execution for the data-parallel kernels
// (simulation, bootstrap replicates, Monte Carlo replicates, matching).
// Every kernel writes disjoint slots indexed by the loop variable and all
// reductions happen afterwards in index order, so both policies produce
// bit-identical results; tests compare them and the bench target times them.
enum class Exec { Serial, Parallel };

inline Exec default_exec() {
#ifdef _OPENMP
    return Exec::Parallel;
#else
    return Exec::Serial;
#endif
}

template <typename Fn>
void parallel_for(std::ptrdiff_t n, Exec exec, Fn&& fn) {
    if (exec == Exec::Serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#else
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#endif
}

inline void set_thread_cap(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

} // namespace margex
