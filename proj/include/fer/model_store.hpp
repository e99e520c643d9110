#pragma once

#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fer/dataset.hpp"
#include "fer/errors.hpp"
#include "fer/network.hpp"

namespace fer {

namespace detail {

inline constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const std::vector<uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back(kB64Alphabet[v & 63]);
    }
    const size_t rest = bytes.size() - i;
    if (rest == 1) {
        const uint32_t v = bytes[i] << 16;
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (rest == 2) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

inline std::vector<uint8_t> base64_decode(const std::string& text) {
    static const auto value_of = [] {
        std::array<int8_t, 256> t;
        t.fill(-1);
        for (int i = 0; i < 64; ++i) t[static_cast<uint8_t>(kB64Alphabet[i])] = static_cast<int8_t>(i);
        return t;
    }();
    std::vector<uint8_t> out;
    uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int8_t v = value_of[static_cast<uint8_t>(c)];
        if (v < 0) throw SchemaError("invalid base64 character in weight data");
        acc = (acc << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<uint8_t>((acc >> bits) & 0xff));
        }
    }
    return out;
}

// Little-endian float32 packing is normative for the file format, independent
// of the host byte order.
inline std::vector<uint8_t> floats_to_le(const std::vector<float>& values) {
    std::vector<uint8_t> bytes;
    bytes.reserve(values.size() * 4);
    for (float f : values) {
        const uint32_t u = std::bit_cast<uint32_t>(f);
        bytes.push_back(static_cast<uint8_t>(u & 0xff));
        bytes.push_back(static_cast<uint8_t>((u >> 8) & 0xff));
        bytes.push_back(static_cast<uint8_t>((u >> 16) & 0xff));
        bytes.push_back(static_cast<uint8_t>((u >> 24) & 0xff));
    }
    return bytes;
}

inline std::vector<float> le_to_floats(const std::vector<uint8_t>& bytes) {
    if (bytes.size() % 4 != 0) throw SchemaError("weight byte payload is not a multiple of 4");
    std::vector<float> values(bytes.size() / 4);
    for (size_t i = 0; i < values.size(); ++i) {
        const uint32_t u = static_cast<uint32_t>(bytes[4 * i]) | (static_cast<uint32_t>(bytes[4 * i + 1]) << 8) |
                           (static_cast<uint32_t>(bytes[4 * i + 2]) << 16) |
                           (static_cast<uint32_t>(bytes[4 * i + 3]) << 24);
        values[i] = std::bit_cast<float>(u);
    }
    return values;
}

inline nlohmann::json layer_to_json(const LayerSpec& layer) {
    nlohmann::json j;
    j["kind"] = layer_kind_name(layer.kind);
    switch (layer.kind) {
        case LayerKind::Conv2D:
            j["filters"] = layer.units;
            j["kernel"] = {3, 3};
            j["activation"] = "relu";
            break;
        case LayerKind::Dense:
            j["units"] = layer.units;
            j["activation"] = layer.activation == Activation::Softmax ? "softmax" : "relu";
            break;
        case LayerKind::Dropout:
            j["rate"] = layer.rate;
            break;
        case LayerKind::Rescaling:
            j["scale"] = layer.scale;
            break;
        case LayerKind::MaxPool2D:
            j["pool"] = {2, 2};
            j["stride"] = 2;
            break;
        default:
            break;
    }
    return j;
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "Rescaling") return LayerSpec::rescaling(j.at("scale").get<float>());
    if (kind == "Augment") return LayerSpec::augment();
    if (kind == "Conv2D") return LayerSpec::conv2d(j.at("filters").get<int>());
    if (kind == "MaxPool2D") return LayerSpec::maxpool2d();
    if (kind == "Dropout") return LayerSpec::dropout(j.at("rate").get<float>());
    if (kind == "Flatten") return LayerSpec::flatten();
    if (kind == "Dense") {
        const std::string act = j.value("activation", "relu");
        return LayerSpec::dense(j.at("units").get<int>(),
                                act == "softmax" ? Activation::Softmax : Activation::ReLU);
    }
    throw SchemaError("unknown layer kind '" + kind + "'");
}

}  // namespace detail

struct SaveOptions {
    std::vector<std::string> class_names{emotion_names().begin(), emotion_names().end()};
    nlohmann::json training_config;  // optional snapshot, stored verbatim
    bool include_timestamp = true;
};

// Writes the network as a single self-describing JSON document: architecture,
// every parameter tensor as base64 little-endian float32, and metadata. Keys
// are emitted in sorted order, so identical networks serialize identically.
inline void save_model(const Network& net, const std::string& path, const SaveOptions& options = {}) {
    for (const auto& [name, p] : net.params)
        for (float v : p.data)
            if (!std::isfinite(v)) throw FiniteError("refusing to save non-finite weight in " + name);

    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["architecture"]["input_shape"] = net.spec.input_shape;
    auto& layers = doc["architecture"]["layers"] = nlohmann::json::array();
    for (const LayerSpec& layer : net.spec.layers) layers.push_back(detail::layer_to_json(layer));

    auto& weights = doc["weights"] = nlohmann::json::object();
    for (const auto& [name, p] : net.params) {
        weights[name] = {{"shape", p.shape}, {"data", detail::base64_encode(detail::floats_to_le(p.data))}};
    }

    doc["metadata"]["class_names"] = options.class_names;
    if (!options.training_config.is_null()) doc["metadata"]["training_config"] = options.training_config;
    if (options.include_timestamp) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        doc["metadata"]["created"] = buf;
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << doc.dump(2) << '\n';
    if (!f) throw IoError("short write to " + path);
}

struct LoadedModel {
    Network network;
    std::vector<std::string> class_names;
};

// Rebuilds a network from a model file, checking the format version, the
// architecture, and that every parameter slot is filled with a same-shaped
// weight tensor. A loaded model's forward pass is bit-identical to the one
// that was saved.
inline LoadedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ": not a valid model document: " + e.what());
    }

    const int version = doc.value("format_version", -1);
    if (version != 1) throw VersionError(path + ": unsupported format_version " + std::to_string(version));

    NetworkSpec spec;
    try {
        spec.input_shape = doc.at("architecture").at("input_shape").get<Shape>();
        for (const auto& lj : doc.at("architecture").at("layers")) spec.layers.push_back(detail::layer_from_json(lj));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ": bad architecture section: " + e.what());
    }

    LoadedModel loaded{make_network<float>(spec, 0), {}};
    Network& net = loaded.network;
    const auto& weights = doc.at("weights");
    for (auto& [name, p] : net.params) {
        if (!weights.contains(name)) throw SchemaError(path + ": missing weight entry '" + name + "'");
        const auto& entry = weights.at(name);
        const Shape shape = entry.at("shape").get<Shape>();
        if (shape != p.shape)
            throw ShapeError(path + ": weight '" + name + "' has shape " + shape_str(shape) + ", expected " +
                             shape_str(p.shape));
        const std::vector<float> values =
            detail::le_to_floats(detail::base64_decode(entry.at("data").get<std::string>()));
        if (static_cast<int64_t>(values.size()) != p.size())
            throw ShapeError(path + ": weight '" + name + "' has " + std::to_string(values.size()) +
                             " values, expected " + std::to_string(p.size()));
        p.data = values;
    }
    if (weights.size() != net.params.size())
        throw SchemaError(path + ": model file has " + std::to_string(weights.size()) +
                          " weight entries, architecture needs " + std::to_string(net.params.size()));

    if (doc.contains("metadata") && doc["metadata"].contains("class_names"))
        loaded.class_names = doc["metadata"]["class_names"].get<std::vector<std::string>>();
    return loaded;
}

}  // namespace fer
