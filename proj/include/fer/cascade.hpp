#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fer/errors.hpp"

namespace fer {

// ---------------------------------------------------------------------------
// Minimal XML reader, just enough for the cascade serialization: elements,
// attributes (parsed, only kept for diagnostics), character data, comments
// and the leading declaration. No entities beyond the five predefined ones.
// ---------------------------------------------------------------------------

struct XmlNode {
    std::string name;
    std::string text;
    std::vector<XmlNode> children;

    const XmlNode* child(const std::string& tag) const {
        for (const XmlNode& c : children)
            if (c.name == tag) return &c;
        return nullptr;
    }
    const XmlNode& require(const std::string& tag) const {
        const XmlNode* c = child(tag);
        if (!c) throw SchemaError("missing <" + tag + "> inside <" + name + ">");
        return *c;
    }
};

namespace detail {

class XmlParser {
public:
    explicit XmlParser(const std::string& text) : s_(text) {}

    XmlNode parse_document() {
        skip_prolog();
        XmlNode root = parse_element();
        skip_misc();
        if (pos_ != s_.size()) throw SchemaError("trailing content after the root element");
        return root;
    }

private:
    const std::string& s_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw SchemaError("XML error at offset " + std::to_string(pos_) + ": " + why);
    }
    bool starts_with(const char* lit) const { return s_.compare(pos_, std::char_traits<char>::length(lit), lit) == 0; }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    void skip_comment() {
        const size_t end = s_.find("-->", pos_);
        if (end == std::string::npos) fail("unterminated comment");
        pos_ = end + 3;
    }
    void skip_prolog() {
        skip_ws();
        if (starts_with("<?")) {
            const size_t end = s_.find("?>", pos_);
            if (end == std::string::npos) fail("unterminated declaration");
            pos_ = end + 2;
        }
        skip_misc();
    }
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--"))
                skip_comment();
            else
                return;
        }
    }
    std::string read_name() {
        const size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-' ||
                s_[pos_] == '.' || s_[pos_] == ':'))
            ++pos_;
        if (pos_ == start) fail("expected a name");
        return s_.substr(start, pos_ - start);
    }
    void skip_attributes() {
        for (;;) {
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated tag");
            if (s_[pos_] == '>' || s_[pos_] == '/') return;
            read_name();
            skip_ws();
            if (pos_ >= s_.size() || s_[pos_] != '=') fail("attribute without '='");
            ++pos_;
            skip_ws();
            if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("unquoted attribute value");
            const char quote = s_[pos_++];
            const size_t end = s_.find(quote, pos_);
            if (end == std::string::npos) fail("unterminated attribute value");
            pos_ = end + 1;
        }
    }
    void append_text(XmlNode& node, size_t start, size_t end) {
        for (size_t i = start; i < end; ++i) {
            if (s_[i] == '&') {
                if (s_.compare(i, 4, "&lt;") == 0) { node.text += '<'; i += 3; }
                else if (s_.compare(i, 4, "&gt;") == 0) { node.text += '>'; i += 3; }
                else if (s_.compare(i, 5, "&amp;") == 0) { node.text += '&'; i += 4; }
                else if (s_.compare(i, 6, "&quot;") == 0) { node.text += '"'; i += 5; }
                else if (s_.compare(i, 6, "&apos;") == 0) { node.text += '\''; i += 5; }
                else fail("unsupported entity");
            } else {
                node.text += s_[i];
            }
        }
    }
    XmlNode parse_element() {
        if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected '<'");
        ++pos_;
        XmlNode node;
        node.name = read_name();
        skip_attributes();
        if (s_[pos_] == '/') {
            if (pos_ + 1 >= s_.size() || s_[pos_ + 1] != '>') fail("malformed self-closing tag");
            pos_ += 2;
            return node;
        }
        ++pos_;  // '>'
        for (;;) {
            const size_t text_start = pos_;
            const size_t lt = s_.find('<', pos_);
            if (lt == std::string::npos) fail("unterminated element <" + node.name + ">");
            append_text(node, text_start, lt);
            pos_ = lt;
            if (starts_with("<!--")) {
                pos_ += 4;
                skip_comment();
                continue;
            }
            if (starts_with("</")) {
                pos_ += 2;
                const std::string closing = read_name();
                if (closing != node.name)
                    fail("mismatched </" + closing + ">, expected </" + node.name + ">");
                skip_ws();
                if (pos_ >= s_.size() || s_[pos_] != '>') fail("malformed closing tag");
                ++pos_;
                return node;
            }
            node.children.push_back(parse_element());
        }
    }
};

inline std::vector<double> parse_numbers(const std::string& text, const std::string& where) {
    std::vector<double> out;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        try {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw SchemaError("non-numeric token '" + tok + "' in <" + where + ">");
        }
    }
    return out;
}

}  // namespace detail

inline XmlNode parse_xml(const std::string& text) { return detail::XmlParser(text).parse_document(); }

// ---------------------------------------------------------------------------
// Cascade model
// ---------------------------------------------------------------------------

struct HaarRect {
    int x = 0, y = 0, w = 0, h = 0;
    float weight = 0.0f;
};

// Difference of weighted rectangle sums in base-window coordinates.
struct HaarFeature {
    std::vector<HaarRect> rects;  // 2 or 3
};

// Depth-1 decision stump over one feature.
struct WeakClassifier {
    int feature_index = 0;
    float threshold = 0.0f;
    float left_leaf = 0.0f;   // feature value < threshold * window stddev
    float right_leaf = 0.0f;
};

struct CascadeStage {
    std::vector<WeakClassifier> stumps;
    float threshold = 0.0f;  // stage sum below this rejects the window
};

struct CascadeModel {
    int window_width = 0, window_height = 0;
    std::vector<CascadeStage> stages;
    std::vector<HaarFeature> features;
};

// Reads the stump-based boosted HAAR serialization: <cascade> with
// <stages> of <internalNodes>/<leafValues> quadruple encoding and a shared
// <features> table of weighted rects. Tilted features and multi-node trees
// are rejected rather than silently mis-evaluated.
inline CascadeModel parse_cascade_xml(const std::string& text) {
    const XmlNode root = parse_xml(text);
    const XmlNode* cascade = root.name == "cascade" ? &root : root.child("cascade");
    if (!cascade)
        throw SchemaError("missing <cascade> element (only the stump-based cascade format is supported)");

    const std::string stage_type = [&] {
        std::istringstream is(cascade->require("stageType").text);
        std::string v;
        is >> v;
        return v;
    }();
    if (stage_type != "BOOST") throw SchemaError("unsupported stageType '" + stage_type + "'");
    const std::string feature_type = [&] {
        std::istringstream is(cascade->require("featureType").text);
        std::string v;
        is >> v;
        return v;
    }();
    if (feature_type != "HAAR") throw SchemaError("unsupported featureType '" + feature_type + "'");

    CascadeModel model;
    {
        const auto w = detail::parse_numbers(cascade->require("width").text, "width");
        const auto h = detail::parse_numbers(cascade->require("height").text, "height");
        if (w.size() != 1 || h.size() != 1) throw SchemaError("bad <width>/<height>");
        model.window_width = static_cast<int>(w[0]);
        model.window_height = static_cast<int>(h[0]);
        if (model.window_width < 1 || model.window_height < 1)
            throw SchemaError("non-positive base window size");
    }

    for (const XmlNode& feat : cascade->require("features").children) {
        HaarFeature f;
        const XmlNode* tilted = feat.child("tilted");
        if (tilted) {
            const auto v = detail::parse_numbers(tilted->text, "tilted");
            if (!v.empty() && v[0] != 0.0) throw SchemaError("tilted features are not supported");
        }
        for (const XmlNode& rect : feat.require("rects").children) {
            const auto v = detail::parse_numbers(rect.text, "rects");
            if (v.size() != 5) throw SchemaError("rect entry must be 'x y w h weight'");
            HaarRect r{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                       static_cast<int>(v[3]), static_cast<float>(v[4])};
            if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > model.window_width ||
                r.y + r.h > model.window_height)
                throw SchemaError("feature rect outside the base window");
            f.rects.push_back(r);
        }
        if (f.rects.size() < 2 || f.rects.size() > 3)
            throw SchemaError("feature must have 2 or 3 rects, got " + std::to_string(f.rects.size()));
        bool pos = false, neg = false;
        for (const HaarRect& r : f.rects) {
            pos = pos || r.weight > 0.0f;
            neg = neg || r.weight < 0.0f;
        }
        if (!pos || !neg) throw SchemaError("feature weights must mix signs");
        model.features.push_back(std::move(f));
    }

    for (const XmlNode& stage : cascade->require("stages").children) {
        CascadeStage st;
        {
            const auto v = detail::parse_numbers(stage.require("stageThreshold").text, "stageThreshold");
            if (v.size() != 1) throw SchemaError("bad <stageThreshold>");
            st.threshold = static_cast<float>(v[0]);
        }
        for (const XmlNode& weak : stage.require("weakClassifiers").children) {
            const auto nodes = detail::parse_numbers(weak.require("internalNodes").text, "internalNodes");
            const auto leaves = detail::parse_numbers(weak.require("leafValues").text, "leafValues");
            if (nodes.size() != 4)
                throw SchemaError("only depth-1 stumps are supported (expected one internal-node quadruple)");
            const int left = static_cast<int>(nodes[0]), right = static_cast<int>(nodes[1]);
            if (left > 0 || right > 0) throw SchemaError("multi-node weak classifier trees are not supported");
            const size_t li = static_cast<size_t>(-left), ri = static_cast<size_t>(-right);
            if (li >= leaves.size() || ri >= leaves.size())
                throw SchemaError("leaf reference outside <leafValues>");
            WeakClassifier wc;
            wc.feature_index = static_cast<int>(nodes[2]);
            if (wc.feature_index < 0 || wc.feature_index >= static_cast<int>(model.features.size()))
                throw IndexError("featureIdx " + std::to_string(wc.feature_index) + " outside feature table of " +
                                 std::to_string(model.features.size()));
            wc.threshold = static_cast<float>(nodes[3]);
            wc.left_leaf = static_cast<float>(leaves[li]);
            wc.right_leaf = static_cast<float>(leaves[ri]);
            st.stumps.push_back(wc);
        }
        if (st.stumps.empty()) throw SchemaError("stage with no weak classifiers");
        model.stages.push_back(std::move(st));
    }
    if (model.stages.empty()) throw SchemaError("cascade with no stages");
    return model;
}

inline CascadeModel load_cascade(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_cascade_xml(buf.str());
}

}  // namespace fer
