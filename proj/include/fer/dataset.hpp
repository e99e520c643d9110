#pragma once

#include <array>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "fer/errors.hpp"
#include "fer/image.hpp"
#include "fer/rng.hpp"
#include "fer/tensor.hpp"

namespace fer {

// Class indices follow the FER-2013 CSV encoding of the `emotion` column.
inline const std::array<std::string, 7>& emotion_names() {
    static const std::array<std::string, 7> names = {"Angry",    "Disgust", "Fear",   "Happy",
                                                     "Sad",      "Surprise", "Neutral"};
    return names;
}

inline const std::string& emotion_name(int index) {
    if (index < 0 || index > 6) throw RangeError("emotion index " + std::to_string(index) + " out of 0..6");
    return emotion_names()[static_cast<size_t>(index)];
}

inline constexpr int kImageSide = 48;
inline constexpr int kNumClasses = 7;

struct Sample {
    GrayImage image;  // 48x48
    int label = 0;    // 0..6
};

enum class Split { Train, Test, Validation };

struct Dataset {
    std::vector<Sample> samples;
    Split split = Split::Train;

    size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    std::array<int64_t, kNumClasses> class_counts() const {
        std::array<int64_t, kNumClasses> counts{};
        for (const Sample& s : samples) counts[static_cast<size_t>(s.label)] += 1;
        return counts;
    }
};

struct FerData {
    Dataset train;
    Dataset test;
};

namespace detail {

// Splits a CSV record into fields; double quotes around a field are stripped
// (some copies of the dataset quote the pixel column).
inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') fields.back().pop_back();
    return fields;
}

}  // namespace detail

// Loads the fer2013.csv distribution: header `emotion,pixels,Usage`, then one
// row per image with 2304 space-separated pixel bytes. Rows tagged Training
// go to the train split; PublicTest and PrivateTest both go to the test split.
inline FerData load_fer_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);

    FerData data;
    data.train.split = Split::Train;
    data.test.split = Split::Test;

    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty file");
    {
        const auto header = detail::split_csv_row(line);
        if (header.size() != 3 || header[0] != "emotion" || header[1] != "pixels" || header[2] != "Usage")
            throw ParseError(path + ": expected header 'emotion,pixels,Usage', got '" + line + "'");
    }

    size_t row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_row(line);
        if (fields.size() != 3)
            throw ParseError(path + ": row " + std::to_string(row) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));

        Sample s;
        if (fields[0].size() != 1 || fields[0][0] < '0' || fields[0][0] > '6')
            throw ParseError(path + ": row " + std::to_string(row) + ": bad emotion '" + fields[0] + "'");
        s.label = fields[0][0] - '0';

        s.image = GrayImage(kImageSide, kImageSide);
        const std::string& px = fields[1];
        size_t pos = 0, count = 0;
        while (pos < px.size()) {
            while (pos < px.size() && px[pos] == ' ') ++pos;
            if (pos >= px.size()) break;
            int v = 0;
            bool any = false;
            while (pos < px.size() && px[pos] != ' ') {
                const char c = px[pos++];
                if (c < '0' || c > '9')
                    throw ParseError(path + ": row " + std::to_string(row) + ": non-numeric pixel data");
                v = v * 10 + (c - '0');
                any = true;
                if (v > 255)
                    throw ParseError(path + ": row " + std::to_string(row) + ": pixel value > 255");
            }
            if (!any) break;
            if (count >= s.image.pixels.size())
                throw CountError(path + ": row " + std::to_string(row) + ": more than 2304 pixels");
            s.image.pixels[count++] = static_cast<uint8_t>(v);
        }
        if (count != s.image.pixels.size())
            throw CountError(path + ": row " + std::to_string(row) + ": expected 2304 pixels, got " +
                             std::to_string(count));

        const std::string& usage = fields[2];
        if (usage == "Training")
            data.train.samples.push_back(std::move(s));
        else if (usage == "PublicTest" || usage == "PrivateTest")
            data.test.samples.push_back(std::move(s));
        else
            throw ParseError(path + ": row " + std::to_string(row) + ": unknown Usage tag '" + usage + "'");
    }
    return data;
}

// Carves a seeded validation subset out of a training set.
inline std::pair<Dataset, Dataset> holdout_split(const Dataset& train, double fraction, uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw ArgError("holdout fraction must be in (0,1), got " + std::to_string(fraction));
    if (train.empty()) throw DataError("holdout_split: empty dataset");
    std::vector<size_t> idx(train.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(mix_seed(seed, 0x686f6c64ull));
    rng.shuffle(idx);
    const size_t n_val = std::max<size_t>(1, static_cast<size_t>(fraction * static_cast<double>(idx.size())));
    std::pair<Dataset, Dataset> out;
    out.first.split = Split::Train;
    out.second.split = Split::Validation;
    for (size_t i = 0; i < idx.size(); ++i) {
        (i < n_val ? out.second : out.first).samples.push_back(train.samples[idx[i]]);
    }
    return out;
}

// Raw bytes; scaling by 1/255 is the network's Rescaling layer's job.
template <typename T = float>
TensorT<T> sample_to_tensor(const Sample& s) {
    TensorT<T> t({kImageSide, kImageSide, 1});
    for (size_t i = 0; i < s.image.pixels.size(); ++i) t.data[i] = static_cast<T>(s.image.pixels[i]);
    return t;
}

}  // namespace fer
