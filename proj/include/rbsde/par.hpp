#pragma once

#include <cstddef>

#ifdef RBSDE_HAVE_OPENMP
#include <omp.h>
#endif

namespace rbsde::par {

// Process-wide switch for the OpenMP paths. Off by default so results are
// reproducible in single-threaded tools unless parallelism is requested.
// Parallel and serial paths perform identical per-node arithmetic, so
// enabling this never changes any computed value.
inline bool& detail_enabled_flag() {
    static bool flag = false;
    return flag;
}

inline void enable(bool on) { detail_enabled_flag() = on; }
inline bool enabled() { return detail_enabled_flag(); }

inline int max_threads() {
#ifdef RBSDE_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Loop grain below which the parallel dispatch is not worth the overhead;
// per-node work in the sweeps is a handful of flops, so slices need to be
// fairly wide before forking pays.
inline constexpr std::size_t kMinParallelGrain = 16384;

template <typename F>
void for_each(std::size_t n, F&& body) {
#ifdef RBSDE_HAVE_OPENMP
    if (enabled() && n >= kMinParallelGrain) {
        const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < nn; ++i) body(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace rbsde::par
