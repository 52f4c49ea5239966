#pragma once
// minimal fan-out helper: runs fn(0..count) across nThreads workers

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tqs::detail {

inline void run_parallel(int nThreads, size_t count, const std::function<void(size_t)>& fn) {
    if (count == 0)
        return;
    if (nThreads <= 1 || count == 1) {
        for (size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }

    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;

    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(errorMutex);
                if (!error)
                    error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    const int spawned = static_cast<int>(std::min<size_t>(nThreads, count));
    pool.reserve(spawned);
    for (int t = 0; t < spawned; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace tqs::detail
