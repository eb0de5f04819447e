#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gaugerl {

/// Execution mode for the data-parallel kernels (per-row certificate checks,
/// evaluation fan-out). Serial is the reference path; tests assert both modes
/// produce identical results.
enum class ExecMode { Serial, Parallel };

/// Runs f(i) for i in [0, n). In Parallel mode iterations are distributed
/// across OpenMP threads; f must only write to its own slot.
template <class F>
void for_each_index(ExecMode mode, int n, F&& f) {
    if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) f(i);
    } else {
        for (int i = 0; i < n; ++i) f(i);
    }
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace gaugerl
