#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace etaq {

/// Worker count for node-parallel loops: ETAQ_THREADS if set, else hardware concurrency.
[[nodiscard]] inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ETAQ_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return std::min<unsigned>(static_cast<unsigned>(v), 256u);
        } catch (...) {
        }
    }
    return hw;
}

/// Runs body(i) for i in [0, count) over contiguous chunks. If several indices throw,
/// the exception of the smallest index is rethrown, so failures are deterministic.
template <class Body>
void parallel_for(std::size_t count, Body&& body, unsigned threads = worker_count()) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::size_t> error_index(threads, std::numeric_limits<std::size_t>::max());
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(count, begin + chunk);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    body(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                    error_index[t] = i;
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::exception_ptr first;
    for (unsigned t = 0; t < threads; ++t) {
        if (errors[t] && error_index[t] < best) {
            best = error_index[t];
            first = errors[t];
        }
    }
    if (first) std::rethrow_exception(first);
}

} // namespace etaq
