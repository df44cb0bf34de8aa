#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace drfuse {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items must write
/// to disjoint slots; the first exception thrown is rethrown after joining.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn)
{
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    std::vector<std::jthread> threads;
    threads.reserve(count);
    for (unsigned t = 0; t < count; ++t)
        threads.emplace_back(worker);
    threads.clear();
    if (error)
        std::rethrow_exception(error);
}

} // namespace drfuse
