#ifndef HSIKME_PARALLEL_HPP
#define HSIKME_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hsikme {

namespace detail {
inline thread_local bool inside_parallel_region = false;
}

/// Runs fn(i) for i in [begin, end) over contiguous chunks on worker threads.
/// Each index must write only its own output so results do not depend on the
/// schedule. The first exception thrown by any worker is rethrown. Calls
/// made from inside a worker run serially.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, std::size_t max_threads = 0)
{
    if (end <= begin)
        return;
    const std::size_t count = end - begin;
    std::size_t threads = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1 || detail::inside_parallel_region) {
        for (std::size_t i = begin; i < end; ++i)
            fn(i);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi)
            break;
        pool.emplace_back([&, lo, hi] {
            detail::inside_parallel_region = true;
            try {
                for (std::size_t i = lo; i < hi; ++i)
                    fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace hsikme

#endif // HSIKME_PARALLEL_HPP
