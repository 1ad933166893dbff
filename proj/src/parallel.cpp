#include "tnlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tnlab {

namespace {

std::atomic<int> g_workers{0};

int resolve(int workers) {
    if (workers > 0) return workers;
    return default_workers();
}

}  // namespace

int default_workers() {
    if (const int w = g_workers.load(); w > 0) return w;
    if (const char* env = std::getenv("LAB_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w > 0) return w;
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_workers(int workers) { g_workers.store(std::max(0, workers)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn, int workers) {
    if (n == 0) return;
    const auto w = static_cast<std::size_t>(std::min<std::size_t>(resolve(workers), n));
    if (w <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(w);
    const std::size_t chunk = (n + w - 1) / w;
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&, t, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void parallel_each(std::size_t n, const std::function<void(std::size_t)>& fn, int workers) {
    if (n == 0) return;
    const auto w = static_cast<std::size_t>(std::min<std::size_t>(resolve(workers), n));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < w; ++t) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!first) first = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace tnlab
