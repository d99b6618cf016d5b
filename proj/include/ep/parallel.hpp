#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ep {

// Runs fn(i) for i in [0, n) on up to `workers` threads and returns results
// in index order. The first exception thrown by any item is rethrown.
template <typename R, typename F>
std::vector<R> parallel_map(size_t n, size_t workers, F&& fn) {
    std::vector<R> out(n);
    workers = std::max<size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i) {
            out[i] = fn(i);
        }
        return out;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto body = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) {
                    err = std::current_exception();
                }
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back(body);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (err) {
        std::rethrow_exception(err);
    }
    return out;
}

inline size_t default_workers() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

}  // namespace ep
