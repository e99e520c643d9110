#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace fer {

// Gradient accumulation is split over a fixed number of lanes; lane l owns
// items l, l+kGradLanes, l+2*kGradLanes, ... in that order. Because the lane
// count and per-lane order never depend on how many threads execute them,
// float sums come out bit-identical for any worker count.
inline constexpr int kGradLanes = 8;

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Runs fn(lane, item) for every item in [0, n_items), partitioned by lane.
// Each lane is executed by exactly one worker, items in ascending order.
inline void parallel_lanes(int64_t n_items, int n_lanes, int n_threads,
                           const std::function<void(int, int64_t)>& fn) {
    n_threads = std::min(resolve_threads(n_threads), n_lanes);
    auto run_lane = [&](int lane) {
        for (int64_t item = lane; item < n_items; item += n_lanes) fn(lane, item);
    };
    if (n_threads <= 1 || n_items <= 1) {
        for (int lane = 0; lane < n_lanes; ++lane) run_lane(lane);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
            for (int lane = t; lane < n_lanes; lane += n_threads) run_lane(lane);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace fer
