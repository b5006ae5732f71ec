#pragma once

// Block-parallel loops with per-block random streams. Work is split into
// fixed blocks whose seeds depend only on (master seed, block index), so
// results do not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace rpf {

inline int& default_threads() {
    static int n = 1;
    return n;
}

inline void set_default_threads(int n) { default_threads() = std::max(1, n); }

inline std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

// Calls fn(b) for b in [0, blocks) on up to `threads` threads. The first
// exception thrown by any block is rethrown on the caller's thread.
inline void parallel_blocks(long blocks, int threads, const std::function<void(long)>& fn) {
    if (threads <= 0) threads = default_threads();
    threads = static_cast<int>(std::min<long>(threads, std::max<long>(blocks, 1)));
    if (threads <= 1) {
        for (long b = 0; b < blocks; ++b) fn(b);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (long b = next++; b < blocks; b = next++) {
                try {
                    fn(b);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace rpf
