#pragma once

#include <cstdint>
#include <vector>

#include "fer/image.hpp"

namespace fer {

// Summed-area tables over pixel values and squared values, with a zero first
// row and column: sum(x,y) holds the total of all pixels strictly above and
// left of (x,y). 64-bit integers keep every rectangle sum exact.
struct IntegralImage {
    int width = 0, height = 0;          // source image dimensions
    std::vector<int64_t> sum, sqsum;    // (width+1) * (height+1)

    static IntegralImage build(const GrayImage& img) {
        IntegralImage ii;
        ii.width = img.width;
        ii.height = img.height;
        const int w1 = img.width + 1;
        ii.sum.assign(static_cast<size_t>(w1) * (img.height + 1), 0);
        ii.sqsum.assign(ii.sum.size(), 0);
        for (int y = 0; y < img.height; ++y) {
            int64_t row = 0, row_sq = 0;
            for (int x = 0; x < img.width; ++x) {
                const int64_t p = img.at(x, y);
                row += p;
                row_sq += p * p;
                const size_t at = static_cast<size_t>(y + 1) * w1 + (x + 1);
                ii.sum[at] = ii.sum[at - w1] + row;
                ii.sqsum[at] = ii.sqsum[at - w1] + row_sq;
            }
        }
        return ii;
    }

    // Four-corner lookup; exact for any in-bounds rectangle, 0 for empty ones.
    int64_t rect_sum(int x, int y, int w, int h) const {
        const int w1 = width + 1;
        return sum[static_cast<size_t>(y + h) * w1 + (x + w)] - sum[static_cast<size_t>(y + h) * w1 + x] -
               sum[static_cast<size_t>(y) * w1 + (x + w)] + sum[static_cast<size_t>(y) * w1 + x];
    }

    int64_t rect_sqsum(int x, int y, int w, int h) const {
        const int w1 = width + 1;
        return sqsum[static_cast<size_t>(y + h) * w1 + (x + w)] - sqsum[static_cast<size_t>(y + h) * w1 + x] -
               sqsum[static_cast<size_t>(y) * w1 + (x + w)] + sqsum[static_cast<size_t>(y) * w1 + x];
    }
};

}  // namespace fer
