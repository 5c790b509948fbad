#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace gwx {

// Runs body(i) for i < n, across OpenMP threads when `parallel` is set.
// The first exception thrown by any iteration is rethrown after the loop;
// the remaining iterations still run.
template <class F>
void for_each_index(std::size_t n, bool parallel, F&& body) {
    std::exception_ptr err;
    std::mutex mu;
    const auto guarded = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            const std::lock_guard lock(mu);
            if (!err) err = std::current_exception();
        }
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i) guarded(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) guarded(i);
    }
    if (err) std::rethrow_exception(err);
}

}    // namespace gwx
