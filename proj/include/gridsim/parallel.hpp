#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace gridsim {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Tasks pull
/// indices from a shared counter; fn must write results into
/// index-addressed slots so the outcome is schedule-independent.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
            fn(i);
    };
    std::vector<std::thread> threads;
    const int count = std::min(workers, n);
    threads.reserve(count);
    for (int t = 0; t < count; ++t)
        threads.emplace_back(worker);
    for (auto& t : threads)
        t.join();
}

} // namespace gridsim
