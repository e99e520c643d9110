// Independent reference implementations the test suite checks the library
// against. Everything here is written as plain scalar loops, sharing no code
// with the implementations under test.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fer/cascade.hpp"
#include "fer/image.hpp"
#include "fer/tensor.hpp"

namespace oracle {

// Triple-loop valid cross-correlation, kernel [3,3,Cin,Cout], channel-last.
template <typename T>
fer::TensorT<T> conv2d(const fer::TensorT<T>& in, const fer::TensorT<T>& kernel, const fer::TensorT<T>& bias) {
    const int h = in.shape[0], w = in.shape[1], cin = in.shape[2], cout = kernel.shape[3];
    fer::TensorT<T> out({h - 2, w - 2, cout});
    for (int y = 0; y < h - 2; ++y)
        for (int x = 0; x < w - 2; ++x)
            for (int f = 0; f < cout; ++f) {
                T acc = bias.data[static_cast<size_t>(f)];
                for (int ky = 0; ky < 3; ++ky)
                    for (int kx = 0; kx < 3; ++kx)
                        for (int c = 0; c < cin; ++c)
                            acc += in.at(y + ky, x + kx, c) *
                                   kernel.data[((static_cast<size_t>(ky) * 3 + kx) * cin + c) * cout + f];
                out.at(y, x, f) = acc;
            }
    return out;
}

template <typename T>
fer::TensorT<T> maxpool(const fer::TensorT<T>& in) {
    const int h = in.shape[0] / 2, w = in.shape[1] / 2, c = in.shape[2];
    fer::TensorT<T> out({h, w, c});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                T best = in.at(2 * y, 2 * x, ch);
                best = std::max(best, in.at(2 * y, 2 * x + 1, ch));
                best = std::max(best, in.at(2 * y + 1, 2 * x, ch));
                best = std::max(best, in.at(2 * y + 1, 2 * x + 1, ch));
                out.at(y, x, ch) = best;
            }
    return out;
}

template <typename T>
fer::TensorT<T> dense(const fer::TensorT<T>& in, const fer::TensorT<T>& weight, const fer::TensorT<T>& bias) {
    const int n_in = weight.shape[0], n_out = weight.shape[1];
    fer::TensorT<T> out({n_out});
    for (int j = 0; j < n_out; ++j) {
        T acc = bias.data[static_cast<size_t>(j)];
        for (int i = 0; i < n_in; ++i)
            acc += in.data[static_cast<size_t>(i)] * weight.data[static_cast<size_t>(i) * n_out + j];
        out.data[static_cast<size_t>(j)] = acc;
    }
    return out;
}

// -sum(y * log p) / N by direct summation.
template <typename T>
double cross_entropy(const fer::TensorT<T>& probs, const fer::TensorT<T>& onehot) {
    const int n = probs.shape[0], k = probs.shape[1];
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            const size_t at = static_cast<size_t>(i) * k + j;
            if (onehot.data[at] != T(0))
                total -= static_cast<double>(onehot.data[at]) *
                         std::log(std::max(static_cast<double>(probs.data[at]), 1e-12));
        }
    return total / n;
}

// Direct double-loop pixel sum over a rectangle.
inline int64_t rect_sum(const fer::GrayImage& img, int x, int y, int w, int h) {
    int64_t total = 0;
    for (int yy = y; yy < y + h; ++yy)
        for (int xx = x; xx < x + w; ++xx) total += img.at(xx, yy);
    return total;
}

inline int64_t rect_sqsum(const fer::GrayImage& img, int x, int y, int w, int h) {
    int64_t total = 0;
    for (int yy = y; yy < y + h; ++yy)
        for (int xx = x; xx < x + w; ++xx) total += static_cast<int64_t>(img.at(xx, yy)) * img.at(xx, yy);
    return total;
}

// Cascade window evaluation recomputing every rectangle sum by pixel loops.
// The arithmetic mirrors the documented contract (round-half-up rect scaling,
// area normalization, threshold * stddev comparison) but shares no code with
// the integral-image path it checks.
inline bool evaluate_window(const fer::CascadeModel& cascade, const fer::GrayImage& img, int ox, int oy,
                            double scale) {
    auto sround = [&](int v) { return static_cast<int>(std::floor(v * scale + 0.5)); };
    const int win_w = sround(cascade.window_width);
    const int win_h = sround(cascade.window_height);
    const double area = static_cast<double>(win_w) * win_h;
    const double mean = static_cast<double>(rect_sum(img, ox, oy, win_w, win_h)) / area;
    const double variance = static_cast<double>(rect_sqsum(img, ox, oy, win_w, win_h)) / area - mean * mean;
    const double stddev = variance > 0.0 ? std::sqrt(variance) : 1.0;

    for (const fer::CascadeStage& stage : cascade.stages) {
        double stage_sum = 0.0;
        for (const fer::WeakClassifier& stump : stage.stumps) {
            const fer::HaarFeature& feature = cascade.features[static_cast<size_t>(stump.feature_index)];
            double value = 0.0;
            for (const fer::HaarRect& r : feature.rects)
                value += static_cast<double>(r.weight) *
                         static_cast<double>(rect_sum(img, ox + sround(r.x), oy + sround(r.y), sround(r.w), sround(r.h)));
            value /= area;
            stage_sum += value < stump.threshold * stddev ? stump.left_leaf : stump.right_leaf;
        }
        if (stage_sum < stage.threshold) return false;
    }
    return true;
}

// Scalar bilinear resize with half-pixel-centered sampling.
inline fer::GrayImage bilinear(const fer::GrayImage& src, int out_w, int out_h) {
    fer::GrayImage out(out_w, out_h);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * src.width / out_w - 0.5;
            double fy = (y + 0.5) * src.height / out_h - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(src.width - 1));
            fy = std::min(std::max(fy, 0.0), static_cast<double>(src.height - 1));
            const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
            const double ax = fx - x0, ay = fy - y0;
            const double v = (1 - ax) * (1 - ay) * src.at(x0, y0) + ax * (1 - ay) * src.at(x1, y0) +
                             (1 - ax) * ay * src.at(x0, y1) + ax * ay * src.at(x1, y1);
            out.at(x, y) = static_cast<uint8_t>(std::lround(v));
        }
    return out;
}

}  // namespace oracle
