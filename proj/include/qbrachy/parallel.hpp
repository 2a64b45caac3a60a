#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace qbrachy {

// Runs f(i) for i in [0, n) on up to `jobs` worker threads (0 = hardware
// concurrency). Callers make results deterministic by writing each index
// into its own pre-sized slot.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            f(i);
        }
    };
    std::vector<std::thread> pool;
    const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace qbrachy
