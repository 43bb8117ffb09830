#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ppca {

namespace detail {
inline int& thread_count_storage() {
    static int count = 1;
    return count;
}
}  // namespace detail

/// Worker threads used by internally parallel operations. Results are
/// written to per-index slots, so outputs do not depend on this value.
inline int thread_count() { return detail::thread_count_storage(); }

inline void set_thread_count(int count) { detail::thread_count_storage() = std::max(1, count); }

/// Runs f(i) for i in [0, n). Each index must write only to its own slots.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    const int workers = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(thread_count()), std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < workers; ++t) {
        const std::size_t begin = static_cast<std::size_t>(t) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& worker : pool) worker.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ppca
