#pragma once

#include <cmath>

#include "fer/dataset.hpp"
#include "fer/image.hpp"
#include "fer/rng.hpp"

namespace fer {

// Random transform ranges in the style of the usual image-generator defaults:
// horizontal flip, small rotation, fractional shift and zoom, nearest-edge
// fill. Zero ranges make the transform the identity.
struct AugmentPolicy {
    float flip_prob = 0.5f;
    float rotation_deg = 10.0f;   // angle drawn from [-rotation_deg, +rotation_deg]
    float shift_frac = 0.1f;      // shift drawn from +-shift_frac * width/height
    float zoom_frac = 0.1f;       // scale drawn from [1-zoom_frac, 1+zoom_frac]

    bool is_identity() const {
        return flip_prob == 0.0f && rotation_deg == 0.0f && shift_frac == 0.0f && zoom_frac == 0.0f;
    }
};

// One concrete draw from an AugmentPolicy.
struct AugmentParams {
    bool flip = false;
    double angle_deg = 0.0;
    double shift_x = 0.0;  // pixels
    double shift_y = 0.0;
    double zoom = 1.0;
};

inline AugmentParams draw_augment_params(const AugmentPolicy& policy, Rng& rng) {
    AugmentParams p;
    p.flip = policy.flip_prob > 0.0f && rng.uniform() < policy.flip_prob;
    p.angle_deg = policy.rotation_deg == 0.0f ? 0.0 : rng.uniform(-policy.rotation_deg, policy.rotation_deg);
    p.shift_x = policy.shift_frac == 0.0f ? 0.0 : rng.uniform(-policy.shift_frac, policy.shift_frac) * kImageSide;
    p.shift_y = policy.shift_frac == 0.0f ? 0.0 : rng.uniform(-policy.shift_frac, policy.shift_frac) * kImageSide;
    p.zoom = policy.zoom_frac == 0.0f ? 1.0 : rng.uniform(1.0 - policy.zoom_frac, 1.0 + policy.zoom_frac);
    return p;
}

// Applies flip/rotation/shift/zoom by inverse-mapping each output pixel
// through the affine transform and sampling bilinearly. Source coordinates
// are clamped to the image, which is what nearest-edge fill means here.
// Identity parameters reproduce the input exactly.
inline GrayImage apply_affine(const GrayImage& src, const AugmentParams& p) {
    GrayImage out(src.width, src.height);
    const double cx = (src.width - 1) / 2.0;
    const double cy = (src.height - 1) / 2.0;
    const double rad = p.angle_deg * 3.14159265358979323846 / 180.0;
    // inverse rotation and inverse zoom, applied about the image center
    const double cosr = std::cos(-rad), sinr = std::sin(-rad);
    const double inv_zoom = 1.0 / p.zoom;
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double dx = x - p.shift_x - cx;
            double dy = y - p.shift_y - cy;
            double rx = (cosr * dx - sinr * dy) * inv_zoom;
            double ry = (sinr * dx + cosr * dy) * inv_zoom;
            double sx = rx + cx;
            const double sy = ry + cy;
            if (p.flip) sx = (src.width - 1) - sx;

            sx = std::clamp(sx, 0.0, static_cast<double>(src.width - 1));
            const double syc = std::clamp(sy, 0.0, static_cast<double>(src.height - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(syc));
            const int x1 = std::min(x0 + 1, src.width - 1);
            const int y1 = std::min(y0 + 1, src.height - 1);
            const double wx = sx - x0, wy = syc - y0;
            const double top = (1.0 - wx) * src.at(x0, y0) + wx * src.at(x1, y0);
            const double bot = (1.0 - wx) * src.at(x0, y1) + wx * src.at(x1, y1);
            const long v = std::lround((1.0 - wy) * top + wy * bot);
            out.at(x, y) = static_cast<uint8_t>(std::clamp(v, 0l, 255l));
        }
    }
    return out;
}

// Seeded random variation of a sample; the label never changes.
inline Sample augment(const Sample& sample, const AugmentPolicy& policy, Rng& rng) {
    if (policy.is_identity()) return sample;
    const AugmentParams p = draw_augment_params(policy, rng);
    return Sample{apply_affine(sample.image, p), sample.label};
}

}  // namespace fer
