#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pmshoot {

/// Runs fn(i) for i in [0, n). Each index owns its output slot, so the result
/// is identical for any worker count. threads == 0 picks the hardware count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, const Fn& fn) {
    if (n == 0) return;
    unsigned nw = threads == 0 ? std::thread::hardware_concurrency() : threads;
    if (nw == 0) nw = 1;
    if (nw > n) nw = static_cast<unsigned>(n);
    if (nw == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nw);
    std::vector<std::exception_ptr> errors(nw);
    for (unsigned t = 0; t < nw; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < n; i += nw) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace pmshoot
