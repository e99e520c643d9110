// Shared fixtures: random tensors, synthetic datasets, handcrafted cascade
// documents and a temp-directory guard.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>

#include "fer/dataset.hpp"
#include "fer/rng.hpp"
#include "fer/tensor.hpp"

namespace testutil {

template <typename T>
fer::TensorT<T> random_tensor(fer::Shape shape, fer::Rng& rng, double lo = -1.0, double hi = 1.0) {
    fer::TensorT<T> t(std::move(shape));
    for (T& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// Synthetic labeled 48x48 samples: a class-dependent base pattern plus seeded
// noise. Classes are visually distinct, so small networks can learn them.
inline fer::Dataset synthetic_dataset(int n, uint64_t seed, fer::Split split = fer::Split::Train) {
    fer::Dataset ds;
    ds.split = split;
    fer::Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        fer::Sample s;
        s.label = i % fer::kNumClasses;
        s.image = fer::GrayImage(fer::kImageSide, fer::kImageSide);
        for (int y = 0; y < fer::kImageSide; ++y)
            for (int x = 0; x < fer::kImageSide; ++x) {
                const int stripe = ((x + (s.label + 1) * y) / 6) % 2;
                const int base = 40 + 25 * s.label + 70 * stripe;
                const int noise = static_cast<int>(rng.uniform_int(31)) - 15;
                s.image.at(x, y) = static_cast<uint8_t>(std::clamp(base + noise, 0, 255));
            }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

// A 1-stage, 1-stump, 1-feature document in the cascade serialization. The
// feature is a vertical half-split of an 8x8 window; thresholds are chosen by
// the caller to force accept/reject behavior.
inline std::string minimal_cascade_xml(double stage_threshold, double stump_threshold = 0.0,
                                       double left_leaf = -1.0, double right_leaf = 1.0) {
    char buf[1536];
    std::snprintf(buf, sizeof buf, R"(<?xml version="1.0"?>
<opencv_storage>
<cascade>
  <stageType>BOOST</stageType>
  <featureType>HAAR</featureType>
  <height>8</height>
  <width>8</width>
  <stages>
    <_>
      <maxWeakCount>1</maxWeakCount>
      <stageThreshold>%.9g</stageThreshold>
      <weakClassifiers>
        <_>
          <internalNodes>0 -1 0 %.9g</internalNodes>
          <leafValues>%.9g %.9g</leafValues>
        </_>
      </weakClassifiers>
    </_>
  </stages>
  <features>
    <_>
      <rects>
        <_>0 0 4 8 -1.</_>
        <_>4 0 4 8 1.</_>
      </rects>
    </_>
  </features>
</cascade>
</opencv_storage>
)",
                  stage_threshold, stump_threshold, left_leaf, right_leaf);
    return buf;
}

// Unique temp directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("fer_test_" + tag + "_" + std::to_string(counter++) + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
