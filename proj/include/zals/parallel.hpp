#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace zals {

// Worker count: ZALS_THREADS caps internal parallelism, default all cores.
inline unsigned max_threads() {
    if (const char* env = std::getenv("ZALS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Static block partition of [0, count) over at most n_threads workers.
// body(i) must be reentrant and write only to its own slot; the first
// exception thrown by any worker is rethrown after all workers join.
template <class F>
void parallel_for(std::size_t count, F&& body, unsigned n_threads = 0) {
    if (n_threads == 0) n_threads = max_threads();
    n_threads = static_cast<unsigned>(
        std::min<std::size_t>(n_threads, count == 0 ? 1 : count));

    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(n_threads);
    const std::size_t chunk = (count + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::size_t lo = static_cast<std::size_t>(t) * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&, t, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace zals
