#include "r2ps/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace r2ps {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
    const int n = g_max_threads.load();
    if (n > 0) return n;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
#endif
}

int effective_threads(std::size_t n) {
#ifndef _OPENMP
    (void)n;
    return 1;
#else
    if (n < 2) return 1;
    int t = max_threads();
    if (static_cast<std::size_t>(t) > n) t = static_cast<int>(n);
    return t;
#endif
}

namespace detail {

void run_parallel(std::size_t n, int threads, void (*trampoline)(void*, std::size_t), void* ctx) {
#ifdef _OPENMP
    std::atomic<bool> failed{false};
    std::exception_ptr err;
    std::mutex err_mu;
#pragma omp parallel for num_threads(threads) schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            trampoline(ctx, static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!failed.exchange(true)) err = std::current_exception();
        }
    }
    if (failed.load()) std::rethrow_exception(err);
#else
    (void)threads;
    for (std::size_t i = 0; i < n; ++i) trampoline(ctx, i);
#endif
}

} // namespace detail
} // namespace r2ps
