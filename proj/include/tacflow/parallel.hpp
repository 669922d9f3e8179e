#pragma once

// Row-tile parallelism with a fixed partition, so results do not depend on
// how many workers execute the tiles. Tiles write disjoint output rows;
// any cross-tile reduction must merge in tile order.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace tacflow {

inline int worker_count() {
    if (const char* env = std::getenv("TACFLOW_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

// Invokes fn(y0, y1) over consecutive row ranges covering [0, h).
inline void parallel_rows(int h, const std::function<void(int, int)>& fn, int tile = 32) {
    if (h <= 0) return;
    const int n_tiles = (h + tile - 1) / tile;
    const int workers = std::min(worker_count(), n_tiles);
    if (workers <= 1) {
        fn(0, h);
        return;
    }
    std::vector<std::pair<int, int>> ranges;
    ranges.reserve(size_t(n_tiles));
    for (int y = 0; y < h; y += tile) ranges.emplace_back(y, std::min(y + tile, h));
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= ranges.size()) return;
                fn(ranges[i].first, ranges[i].second);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace tacflow
