#ifndef QHYDRO_PARALLEL_HPP
#define QHYDRO_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qhydro {

/// Worker count used when a caller asks for 0 threads.
inline int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs f(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once, so results written per index do not depend on
/// the worker count. The first exception thrown is rethrown here.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    if (threads <= 0) threads = default_threads();
    const std::size_t workers = std::min<std::size_t>(std::size_t(threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr error;
    std::mutex lock;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) f(i);
            } catch (...) {
                std::lock_guard g(lock);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace qhydro

#endif
