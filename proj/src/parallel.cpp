#include "fsdepth/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace fsdepth {

namespace {

int resolve_hardware() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

std::atomic<int> g_max_threads{0};  // 0 = auto

}  // namespace

void set_max_threads(int n) {
    g_max_threads.store(n > 0 ? n : 0);
}

int max_threads() {
    int n = g_max_threads.load();
    return n > 0 ? n : resolve_hardware();
}

void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    const int threads = std::min(max_threads(), count);
    if (threads <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::atomic<int> next{begin};
    auto worker = [&]() {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= end) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int t = 0; t < threads - 1; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

void parallel_chunks(int begin, int end, const std::function<void(int, int)>& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    const int threads = std::min(max_threads(), count);
    if (threads <= 1) {
        fn(begin, end);
        return;
    }
    const int chunk = (count + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int t = 1; t < threads; ++t) {
        int lo = begin + t * chunk;
        int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(fn, lo, hi);
    }
    fn(begin, std::min(end, begin + chunk));
    for (auto& th : pool) th.join();
}

}  // namespace fsdepth
