#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mflq {

// MFLQ_THREADS overrides hardware_concurrency. Results must not depend on
// this value; tests compare runs at different thread counts byte for byte.
inline int default_thread_count() {
    if (const char* env = std::getenv("MFLQ_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return std::min(v, 64);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

// Static partition of [0, n) over worker threads. Each index is processed by
// exactly one worker; writers must target disjoint slots.
inline void parallel_for(int n, const std::function<void(int)>& fn, int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    threads = std::min(threads, std::max(n, 1));
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    const int chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace mflq
