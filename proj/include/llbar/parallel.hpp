#ifndef LLBAR_PARALLEL_HPP
#define LLBAR_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace llbar {

/// Worker count: hardware concurrency, capped by LLBAR_THREADS when set.
inline unsigned thread_cap() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LLBAR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) n = std::min(n, static_cast<unsigned>(v));
    }
    return n;
}

/// Calls f(i) for i in [0, count). Results must be written to per-index slots
/// so the outcome does not depend on scheduling. The first exception thrown
/// by any worker is rethrown.
template <typename F>
void parallel_for(std::size_t count, F&& f) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_cap(), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(count);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace llbar

#endif // LLBAR_PARALLEL_HPP
