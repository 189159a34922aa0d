#pragma once

#include <cstddef>

namespace r2ps {

// Global worker-count knob for the OpenMP kernels. 0 means "use all
// hardware threads"; 1 forces the serial path everywhere.
void set_max_threads(int n);
int max_threads();

// Threads that would actually be used for a loop of n iterations.
int effective_threads(std::size_t n);

namespace detail {
void run_parallel(std::size_t n, int threads, void (*trampoline)(void*, std::size_t), void* ctx);
}

// Data-parallel loop: f(i) for i in [0, n). Every iteration must write only
// its own output slots; under that contract results are identical for any
// worker count. Exceptions are captured and rethrown after the loop joins.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    const int t = effective_threads(n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    auto trampoline = [](void* ctx, std::size_t i) { (*static_cast<F*>(ctx))(i); };
    detail::run_parallel(n, t, trampoline, &f);
}

} // namespace r2ps
