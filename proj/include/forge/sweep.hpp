#pragma once

#include "forge/field.hpp"

#include <exception>
#include <vector>

#ifdef FORGE_HAVE_OPENMP
#include <omp.h>
#endif

namespace forge {

enum class SweepMode { parallel, serial };

// Worker count: FORGE_THREADS when set (>= 1), else the OpenMP default.
int sweep_threads();

// fn(point, cache) for every point, one fresh cache per point. Results come
// back in point order whatever the schedule; if any point throws, the
// exception of the lowest index is rethrown, so failures are deterministic too.
// The serial mode is the reference the parallel one is tested against.
template <class R, class F>
std::vector<R> sweep(const std::vector<ChartPoint>& points, F&& fn, SweepMode mode = SweepMode::parallel) {
    const long n = static_cast<long>(points.size());
    std::vector<R> out(points.size());
    std::vector<std::exception_ptr> err(points.size());
    auto one = [&](long i) {
        try {
            EvalCache cache;
            out[i] = fn(points[i], cache);
        } catch (...) {
            err[i] = std::current_exception();
        }
    };
    if (mode == SweepMode::serial || n < 2) {
        for (long i = 0; i < n; ++i) one(i);
    } else {
#ifdef FORGE_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 4) num_threads(sweep_threads())
        for (long i = 0; i < n; ++i) one(i);
#else
        for (long i = 0; i < n; ++i) one(i);
#endif
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace forge
