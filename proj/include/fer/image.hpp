#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fer/errors.hpp"

namespace fer {

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;
};

struct GrayImage {
    int width = 0, height = 0;
    std::vector<uint8_t> pixels;  // row-major

    GrayImage() = default;
    GrayImage(int w, int h, uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
};

// ITU-R BT.601 luma, rounded and clamped to 0..255.
inline uint8_t rgb_to_gray(uint8_t r, uint8_t g, uint8_t b) {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    const long v = std::lround(y);
    return static_cast<uint8_t>(std::clamp(v, 0l, 255l));
}

namespace detail {

// Reads the next whitespace/comment-delimited header token of a PNM file.
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

inline int pnm_int(std::istream& in, const std::string& path, const char* what) {
    const std::string tok = pnm_token(in);
    if (tok.empty()) throw TruncatedError(path + ": missing " + std::string(what));
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw FormatError(path + ": bad " + std::string(what) + " '" + tok + "'");
    }
}

}  // namespace detail

// Binary P5 PGM reader; binary P6 PPM is accepted and converted to grayscale.
// Only 8-bit files (maxval 255) are supported.
inline GrayImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    const std::string magic = detail::pnm_token(f);
    if (magic != "P5" && magic != "P6")
        throw FormatError(path + ": expected P5/P6 magic, got '" + magic + "'");
    const int w = detail::pnm_int(f, path, "width");
    const int h = detail::pnm_int(f, path, "height");
    const int maxval = detail::pnm_int(f, path, "maxval");
    if (w < 1 || h < 1) throw FormatError(path + ": bad dimensions");
    if (maxval != 255) throw FormatError(path + ": maxval must be 255, got " + std::to_string(maxval));
    // the single whitespace byte after maxval was consumed by the tokenizer

    GrayImage img(w, h);
    if (magic == "P5") {
        f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
        if (f.gcount() != static_cast<std::streamsize>(img.pixels.size()))
            throw TruncatedError(path + ": pixel payload shorter than header promises");
    } else {
        std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3);
        f.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
        if (f.gcount() != static_cast<std::streamsize>(rgb.size()))
            throw TruncatedError(path + ": pixel payload shorter than header promises");
        for (size_t i = 0; i < img.pixels.size(); ++i)
            img.pixels[i] = rgb_to_gray(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
    }
    return img;
}

inline void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!f) throw IoError("short write to " + path);
}

// Bilinear resample with half-pixel-centered coordinates, so an identity-size
// resize copies pixels through exactly and constants stay constant.
inline GrayImage bilinear_resize(const GrayImage& src, int out_w, int out_h) {
    GrayImage out(out_w, out_h);
    const double sx = static_cast<double>(src.width) / out_w;
    const double sy = static_cast<double>(src.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.height - 1);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.width - 1);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            const double top = (1.0 - wx) * src.at(x0, y0) + wx * src.at(x1, y0);
            const double bot = (1.0 - wx) * src.at(x0, y1) + wx * src.at(x1, y1);
            const long v = std::lround((1.0 - wy) * top + wy * bot);
            out.at(x, y) = static_cast<uint8_t>(std::clamp(v, 0l, 255l));
        }
    }
    return out;
}

// Crop box then bilinear resample to out_w x out_h (the network input size).
inline GrayImage crop_resize(const GrayImage& img, const Rect& box, int out_w = 48, int out_h = 48) {
    if (box.w < 1 || box.h < 1 || box.x < 0 || box.y < 0 || box.x + box.w > img.width ||
        box.y + box.h > img.height)
        throw BoundsError("crop_resize: box (" + std::to_string(box.x) + ',' + std::to_string(box.y) + ',' +
                          std::to_string(box.w) + ',' + std::to_string(box.h) + ") outside " +
                          std::to_string(img.width) + 'x' + std::to_string(img.height) + " image");
    GrayImage crop(box.w, box.h);
    for (int y = 0; y < box.h; ++y)
        std::copy_n(img.pixels.begin() + static_cast<size_t>(box.y + y) * img.width + box.x, box.w,
                    crop.pixels.begin() + static_cast<size_t>(y) * box.w);
    if (box.w == out_w && box.h == out_h) return crop;
    return bilinear_resize(crop, out_w, out_h);
}

}  // namespace fer
