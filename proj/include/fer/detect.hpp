#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <tuple>
#include <vector>

#include "fer/cascade.hpp"
#include "fer/errors.hpp"
#include "fer/image.hpp"
#include "fer/integral.hpp"

namespace fer {

struct DetectionBox {
    int x = 0, y = 0, w = 0, h = 0;
    int neighbors = 0;
};

struct WindowDecision {
    bool accepted = false;
    int rejecting_stage = -1;  // first failing stage, -1 when accepted
};

// Round-half-up, applied to every scaled coordinate independently.
inline int scale_round(int v, double scale) { return static_cast<int>(std::floor(v * scale + 0.5)); }

// Evaluates one window at (ox, oy) with the cascade's base window scaled by
// `scale`. Feature rects are scaled (no image pyramid); feature values are
// divided by the window area and compared against stump thresholds times the
// window's pixel standard deviation, computed from the squared-sum table. A
// constant window (zero variance) normalizes with stddev 1.
inline WindowDecision evaluate_window(const CascadeModel& cascade, const IntegralImage& ii, int ox, int oy,
                                      double scale) {
    const int win_w = scale_round(cascade.window_width, scale);
    const int win_h = scale_round(cascade.window_height, scale);
    if (ox < 0 || oy < 0 || win_w < 1 || win_h < 1 || ox + win_w > ii.width || oy + win_h > ii.height)
        throw BoundsError("evaluate_window: window (" + std::to_string(ox) + ',' + std::to_string(oy) + ',' +
                          std::to_string(win_w) + ',' + std::to_string(win_h) + ") outside " +
                          std::to_string(ii.width) + 'x' + std::to_string(ii.height) + " image");

    const double area = static_cast<double>(win_w) * win_h;
    const double mean = static_cast<double>(ii.rect_sum(ox, oy, win_w, win_h)) / area;
    const double variance = static_cast<double>(ii.rect_sqsum(ox, oy, win_w, win_h)) / area - mean * mean;
    const double stddev = variance > 0.0 ? std::sqrt(variance) : 1.0;

    for (size_t s = 0; s < cascade.stages.size(); ++s) {
        const CascadeStage& stage = cascade.stages[s];
        double stage_sum = 0.0;
        for (const WeakClassifier& stump : stage.stumps) {
            const HaarFeature& feature = cascade.features[static_cast<size_t>(stump.feature_index)];
            double value = 0.0;
            for (const HaarRect& r : feature.rects) {
                const int rx = ox + scale_round(r.x, scale);
                const int ry = oy + scale_round(r.y, scale);
                const int rw = scale_round(r.w, scale);
                const int rh = scale_round(r.h, scale);
                value += static_cast<double>(r.weight) * static_cast<double>(ii.rect_sum(rx, ry, rw, rh));
            }
            value /= area;
            stage_sum += value < stump.threshold * stddev ? stump.left_leaf : stump.right_leaf;
        }
        if (stage_sum < stage.threshold) return {false, static_cast<int>(s)};
    }
    return {true, -1};
}

// Transitive-closure clustering of similar rectangles: two boxes belong
// together when each edge differs by at most eps times their mean smaller
// side. Each surviving cluster emits its rounded average box with the cluster
// size as the neighbor count; clusters smaller than max(1, min_neighbors)
// are dropped. Output is sorted, and both clustering and averaging are
// order-free, so permuting the candidates cannot change the result.
inline std::vector<DetectionBox> group_rectangles(const std::vector<Rect>& candidates, int min_neighbors,
                                                  double eps = 0.2) {
    if (eps < 0.0) throw ArgError("group_rectangles: eps must be >= 0");
    const size_t n = candidates.size();
    std::vector<size_t> parent(n);
    std::iota(parent.begin(), parent.end(), size_t{0});
    std::function<size_t(size_t)> find = [&](size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    auto similar = [&](const Rect& a, const Rect& b) {
        const double delta = eps * 0.5 * (std::min(a.w, b.w) + std::min(a.h, b.h));
        return std::abs(a.x - b.x) <= delta && std::abs(a.y - b.y) <= delta &&
               std::abs((a.x + a.w) - (b.x + b.w)) <= delta && std::abs((a.y + a.h) - (b.y + b.h)) <= delta;
    };
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (similar(candidates[i], candidates[j])) {
                // union by smaller root index keeps the forest order-independent
                const size_t ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }

    struct Cluster {
        int64_t x = 0, y = 0, w = 0, h = 0;
        int count = 0;
    };
    std::vector<Cluster> clusters(n);
    for (size_t i = 0; i < n; ++i) {
        Cluster& c = clusters[find(i)];
        c.x += candidates[i].x;
        c.y += candidates[i].y;
        c.w += candidates[i].w;
        c.h += candidates[i].h;
        c.count += 1;
    }

    const int keep = std::max(1, min_neighbors);
    std::vector<DetectionBox> boxes;
    for (const Cluster& c : clusters) {
        if (c.count < keep) continue;
        auto avg = [&](int64_t v) {
            return static_cast<int>(std::floor(static_cast<double>(v) / c.count + 0.5));
        };
        if (c.count > 0) boxes.push_back({avg(c.x), avg(c.y), avg(c.w), avg(c.h), c.count});
    }
    std::sort(boxes.begin(), boxes.end(), [](const DetectionBox& a, const DetectionBox& b) {
        return std::tie(a.y, a.x, a.w, a.h, a.neighbors) < std::tie(b.y, b.x, b.w, b.h, b.neighbors);
    });
    return boxes;
}

struct DetectParams {
    double scale_factor = 1.1;
    int min_neighbors = 3;
    int min_size = 24;     // smallest window edge to scan
    double group_eps = 0.2;
};

// Multiscale sliding-window scan: scales 1, f, f^2, ... while the scaled
// window fits, sliding by max(1, round(2*scale)) pixels, then neighbor
// grouping. Deterministic: candidates are generated in (scale, y, x) order
// and the grouped output is sorted by position.
inline std::vector<DetectionBox> detect_multiscale(const CascadeModel& cascade, const GrayImage& image,
                                                   const DetectParams& params = {}) {
    if (params.scale_factor <= 1.0) throw ArgError("detect_multiscale: scale_factor must be > 1");
    if (params.min_neighbors < 0) throw ArgError("detect_multiscale: min_neighbors must be >= 0");
    const IntegralImage ii = IntegralImage::build(image);

    std::vector<Rect> candidates;
    for (double scale = 1.0;; scale *= params.scale_factor) {
        const int win_w = scale_round(cascade.window_width, scale);
        const int win_h = scale_round(cascade.window_height, scale);
        if (win_w > image.width || win_h > image.height) break;
        if (win_w < params.min_size || win_h < params.min_size) continue;
        const int step = std::max(1, static_cast<int>(std::lround(2.0 * scale)));
        for (int y = 0; y + win_h <= image.height; y += step)
            for (int x = 0; x + win_w <= image.width; x += step)
                if (evaluate_window(cascade, ii, x, y, scale).accepted)
                    candidates.push_back({x, y, win_w, win_h});
    }

    std::vector<DetectionBox> boxes = group_rectangles(candidates, params.min_neighbors, params.group_eps);
    for (DetectionBox& b : boxes) {
        // rounded averages can spill past the edge by a pixel; clamp inside
        b.x = std::clamp(b.x, 0, image.width - 1);
        b.y = std::clamp(b.y, 0, image.height - 1);
        b.w = std::min(b.w, image.width - b.x);
        b.h = std::min(b.h, image.height - b.y);
    }
    return boxes;
}

}  // namespace fer
