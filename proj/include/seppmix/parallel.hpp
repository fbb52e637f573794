#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace seppmix {

// Runs fn(begin, end, worker_index) over contiguous chunks of [0, n).
// Chunk boundaries depend only on (n, workers), so results that reduce
// per-worker outputs in worker order are reproducible for a fixed worker
// count. workers <= 1 runs inline.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        fn(std::size_t{0}, n, 0);
        return;
    }
    const auto w = static_cast<std::size_t>(workers) < n ? static_cast<std::size_t>(workers) : n;
    const std::size_t chunk = (n + w - 1) / w;
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = begin + chunk < n ? begin + chunk : n;
        if (begin >= end) break;
        threads.emplace_back([&fn, begin, end, t] { fn(begin, end, static_cast<int>(t)); });
    }
    for (auto& th : threads) th.join();
}

} // namespace seppmix
