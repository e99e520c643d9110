#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fer/rng.hpp"
#include "fer/tensor.hpp"

namespace fer {

enum class LayerKind { Rescaling, Augment, Conv2D, MaxPool2D, Dropout, Flatten, Dense };
enum class Activation { None, ReLU, Softmax };
enum class Mode { Train, Infer };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Rescaling: return "Rescaling";
        case LayerKind::Augment: return "Augment";
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::MaxPool2D: return "MaxPool2D";
        case LayerKind::Dropout: return "Dropout";
        case LayerKind::Flatten: return "Flatten";
        case LayerKind::Dense: return "Dense";
    }
    return "?";
}

// One row of the layer stack. Conv kernels are fixed at 3x3 and pooling at
// 2x2 stride 2; those are the only variants the architecture uses.
struct LayerSpec {
    LayerKind kind = LayerKind::Flatten;
    int units = 0;                           // Conv2D: filters, Dense: units
    float rate = 0.0f;                       // Dropout
    float scale = 1.0f;                      // Rescaling
    Activation activation = Activation::None;

    static LayerSpec rescaling(float scale = 1.0f / 255.0f) {
        LayerSpec s;
        s.kind = LayerKind::Rescaling;
        s.scale = scale;
        return s;
    }
    static LayerSpec augment() {
        LayerSpec s;
        s.kind = LayerKind::Augment;
        return s;
    }
    static LayerSpec conv2d(int filters) {
        LayerSpec s;
        s.kind = LayerKind::Conv2D;
        s.units = filters;
        s.activation = Activation::ReLU;
        return s;
    }
    static LayerSpec maxpool2d() {
        LayerSpec s;
        s.kind = LayerKind::MaxPool2D;
        return s;
    }
    static LayerSpec dropout(float rate) {
        if (rate < 0.0f || rate >= 1.0f)
            throw ArgError("dropout rate must be in [0,1), got " + std::to_string(rate));
        LayerSpec s;
        s.kind = LayerKind::Dropout;
        s.rate = rate;
        return s;
    }
    static LayerSpec flatten() {
        LayerSpec s;
        s.kind = LayerKind::Flatten;
        return s;
    }
    static LayerSpec dense(int units, Activation act) {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.units = units;
        s.activation = act;
        return s;
    }
};

struct NetworkSpec {
    Shape input_shape;
    std::vector<LayerSpec> layers;

    // The published 19-row stack for 48x48x1 inputs.
    static NetworkSpec canonical(float conv_dropout = 0.25f, float fc_dropout = 0.5f) {
        NetworkSpec spec;
        spec.input_shape = {48, 48, 1};
        spec.layers = {
            LayerSpec::rescaling(),
            LayerSpec::augment(),
            LayerSpec::conv2d(32),
            LayerSpec::conv2d(64),
            LayerSpec::maxpool2d(),
            LayerSpec::dropout(conv_dropout),
            LayerSpec::conv2d(64),
            LayerSpec::conv2d(64),
            LayerSpec::conv2d(128),
            LayerSpec::maxpool2d(),
            LayerSpec::conv2d(128),
            LayerSpec::conv2d(256),
            LayerSpec::maxpool2d(),
            LayerSpec::maxpool2d(),
            LayerSpec::dropout(conv_dropout),
            LayerSpec::flatten(),
            LayerSpec::dense(1024, Activation::ReLU),
            LayerSpec::dropout(fc_dropout),
            LayerSpec::dense(7, Activation::Softmax),
        };
        return spec;
    }
};

// Output shape of every layer in order. Valid 3x3 convolution shrinks H and W
// by 2; 2x2 stride-2 pooling halves them with floor division.
inline std::vector<Shape> infer_shapes(const NetworkSpec& spec) {
    std::vector<Shape> out;
    out.reserve(spec.layers.size());
    Shape cur = spec.input_shape;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        switch (layer.kind) {
            case LayerKind::Rescaling:
            case LayerKind::Augment:
            case LayerKind::Dropout:
                break;
            case LayerKind::Conv2D: {
                if (cur.size() != 3)
                    throw ShapeError("Conv2D at layer " + std::to_string(i) +
                                     " needs an [H,W,C] input, got " + shape_str(cur));
                const int h = cur[0] - 2, w = cur[1] - 2;
                if (h < 1 || w < 1)
                    throw ShapeError("Conv2D at layer " + std::to_string(i) +
                                     " underflows spatial dims: input " + shape_str(cur));
                cur = {h, w, layer.units};
                break;
            }
            case LayerKind::MaxPool2D: {
                if (cur.size() != 3)
                    throw ShapeError("MaxPool2D at layer " + std::to_string(i) +
                                     " needs an [H,W,C] input, got " + shape_str(cur));
                const int h = cur[0] / 2, w = cur[1] / 2;
                if (h < 1 || w < 1)
                    throw ShapeError("MaxPool2D at layer " + std::to_string(i) +
                                     " underflows spatial dims: input " + shape_str(cur));
                cur = {h, w, cur[2]};
                break;
            }
            case LayerKind::Flatten:
                cur = {static_cast<int>(shape_size(cur))};
                break;
            case LayerKind::Dense:
                if (cur.size() != 1)
                    throw ShapeError("Dense at layer " + std::to_string(i) +
                                     " needs a flat input, got " + shape_str(cur));
                cur = {layer.units};
                break;
        }
        out.push_back(cur);
    }
    return out;
}

struct ParamCount {
    std::vector<int64_t> per_layer;
    int64_t total = 0;
};

inline ParamCount count_params(const NetworkSpec& spec) {
    const std::vector<Shape> shapes = infer_shapes(spec);
    ParamCount pc;
    Shape cur = spec.input_shape;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        int64_t n = 0;
        if (layer.kind == LayerKind::Conv2D)
            n = 3ll * 3 * cur[2] * layer.units + layer.units;
        else if (layer.kind == LayerKind::Dense)
            n = static_cast<int64_t>(cur[0]) * layer.units + layer.units;
        pc.per_layer.push_back(n);
        pc.total += n;
        cur = shapes[i];
    }
    return pc;
}

// ---------------------------------------------------------------------------
// Layer kernels. Inputs are single samples [H,W,C]; the batch loop lives in
// network.hpp. Backward kernels accumulate into the gradient tensors.
// ---------------------------------------------------------------------------

// Valid 3x3 cross-correlation, stride 1. Kernel layout [3,3,Cin,Cout],
// channel-last everywhere, so the inner loop over Cout is contiguous.
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& in, const TensorT<T>& kernel, const TensorT<T>& bias) {
    if (in.shape.size() != 3)
        throw ShapeError("conv2d_forward: input must be [H,W,C], got " + shape_str(in.shape));
    const int h = in.shape[0], w = in.shape[1], cin = in.shape[2];
    if (kernel.shape.size() != 4 || kernel.shape[0] != 3 || kernel.shape[1] != 3)
        throw ShapeError("conv2d_forward: kernel must be [3,3,Cin,Cout], got " + shape_str(kernel.shape));
    if (kernel.shape[2] != cin)
        throw ShapeError("conv2d_forward: kernel Cin " + std::to_string(kernel.shape[2]) +
                         " != input channels " + std::to_string(cin));
    const int cout = kernel.shape[3];
    require_shape(bias, {cout}, "conv2d_forward bias");
    if (h < 3 || w < 3)
        throw ShapeError("conv2d_forward: input " + shape_str(in.shape) + " smaller than kernel");

    const int oh = h - 2, ow = w - 2;
    TensorT<T> out({oh, ow, cout});
    const T* src = in.data.data();
    const T* k = kernel.data.data();
    T* dst = out.data.data();
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            T* o = dst + (static_cast<size_t>(y) * ow + x) * cout;
            for (int c = 0; c < cout; ++c) o[c] = bias.data[c];
            for (int ky = 0; ky < 3; ++ky) {
                const T* row = src + (static_cast<size_t>(y + ky) * w + x) * cin;
                const T* krow = k + static_cast<size_t>(ky) * 3 * cin * cout;
                for (int kx = 0; kx < 3; ++kx) {
                    const T* px = row + static_cast<size_t>(kx) * cin;
                    const T* kp = krow + static_cast<size_t>(kx) * cin * cout;
                    for (int c = 0; c < cin; ++c) {
                        const T v = px[c];
                        const T* kc = kp + static_cast<size_t>(c) * cout;
                        for (int f = 0; f < cout; ++f) o[f] += v * kc[f];
                    }
                }
            }
        }
    }
    return out;
}

// Accumulates dKernel/dBias and writes dIn (overwritten, not accumulated).
template <typename T>
void conv2d_backward(const TensorT<T>& in, const TensorT<T>& kernel, const TensorT<T>& dout,
                     TensorT<T>& din, TensorT<T>& dkernel, TensorT<T>& dbias) {
    const int h = in.shape[0], w = in.shape[1], cin = in.shape[2];
    const int oh = dout.shape[0], ow = dout.shape[1], cout = dout.shape[2];
    din = TensorT<T>(in.shape);

    // transposed kernel copy [3,3,Cout,Cin] keeps the dIn inner loop contiguous
    std::vector<T> kt(static_cast<size_t>(9) * cin * cout);
    for (int kyx = 0; kyx < 9; ++kyx) {
        const T* src = kernel.data.data() + static_cast<size_t>(kyx) * cin * cout;
        T* dst = kt.data() + static_cast<size_t>(kyx) * cin * cout;
        for (int c = 0; c < cin; ++c)
            for (int f = 0; f < cout; ++f) dst[static_cast<size_t>(f) * cin + c] = src[static_cast<size_t>(c) * cout + f];
    }

    const T* g = dout.data.data();
    const T* src = in.data.data();
    T* dsrc = din.data.data();
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const T* go = g + (static_cast<size_t>(y) * ow + x) * cout;
            for (int c = 0; c < cout; ++c) dbias.data[c] += go[c];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const size_t at = (static_cast<size_t>(y + ky) * w + (x + kx)) * cin;
                    const T* px = src + at;
                    T* dpx = dsrc + at;
                    T* dk = dkernel.data.data() + static_cast<size_t>(ky * 3 + kx) * cin * cout;
                    const T* ktp = kt.data() + static_cast<size_t>(ky * 3 + kx) * cin * cout;
                    for (int c = 0; c < cin; ++c) {
                        const T v = px[c];
                        T* dkrow = dk + static_cast<size_t>(c) * cout;
                        for (int f = 0; f < cout; ++f) dkrow[f] += v * go[f];
                    }
                    for (int f = 0; f < cout; ++f) {
                        const T gv = go[f];
                        const T* ktrow = ktp + static_cast<size_t>(f) * cin;
                        for (int c = 0; c < cin; ++c) dpx[c] += gv * ktrow[c];
                    }
                }
            }
        }
    }
}

template <typename T>
struct PoolResult {
    TensorT<T> out;
    std::vector<int32_t> argmax;  // flat input index of each window winner
};

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
template <typename T>
PoolResult<T> maxpool_forward(const TensorT<T>& in) {
    if (in.shape.size() != 3)
        throw ShapeError("maxpool_forward: input must be [H,W,C], got " + shape_str(in.shape));
    const int h = in.shape[0], w = in.shape[1], c = in.shape[2];
    if (h < 2 || w < 2)
        throw ShapeError("maxpool_forward: input " + shape_str(in.shape) + " smaller than 2x2 window");
    const int oh = h / 2, ow = w / 2;
    PoolResult<T> r{TensorT<T>({oh, ow, c}), {}};
    r.argmax.resize(static_cast<size_t>(oh) * ow * c);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            for (int ch = 0; ch < c; ++ch) {
                int32_t best = static_cast<int32_t>((static_cast<size_t>(2 * y) * w + 2 * x) * c + ch);
                T bv = in.data[best];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const auto idx =
                            static_cast<int32_t>((static_cast<size_t>(2 * y + dy) * w + 2 * x + dx) * c + ch);
                        if (in.data[idx] > bv) {
                            bv = in.data[idx];
                            best = idx;
                        }
                    }
                const size_t o = (static_cast<size_t>(y) * ow + x) * c + ch;
                r.out.data[o] = bv;
                r.argmax[o] = best;
            }
        }
    }
    return r;
}

template <typename T>
void maxpool_backward(const std::vector<int32_t>& argmax, const TensorT<T>& dout, TensorT<T>& din) {
    din.fill(T(0));
    for (size_t i = 0; i < argmax.size(); ++i) din.data[argmax[i]] += dout.data[i];
}

template <typename T>
TensorT<T> relu(const TensorT<T>& in) {
    TensorT<T> out = in;
    for (T& v : out.data) v = v > T(0) ? v : T(0);
    return out;
}

// out is the forward result; positive outputs mark the pass-through positions.
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& out, const TensorT<T>& dout) {
    TensorT<T> din = dout;
    for (size_t i = 0; i < din.data.size(); ++i)
        if (!(out.data[i] > T(0))) din.data[i] = T(0);
    return din;
}

// weight layout [In,Out]: out_j = sum_i in_i * w_ij + b_j
template <typename T>
TensorT<T> dense_forward(const TensorT<T>& in, const TensorT<T>& weight, const TensorT<T>& bias) {
    if (in.shape.size() != 1)
        throw ShapeError("dense_forward: input must be flat, got " + shape_str(in.shape));
    const int n_in = in.shape[0];
    if (weight.shape.size() != 2 || weight.shape[0] != n_in)
        throw ShapeError("dense_forward: weight " + shape_str(weight.shape) + " does not accept input " +
                         shape_str(in.shape));
    const int n_out = weight.shape[1];
    require_shape(bias, {n_out}, "dense_forward bias");
    TensorT<T> out({n_out});
    for (int j = 0; j < n_out; ++j) out.data[j] = bias.data[j];
    for (int i = 0; i < n_in; ++i) {
        const T v = in.data[i];
        const T* wrow = weight.data.data() + static_cast<size_t>(i) * n_out;
        for (int j = 0; j < n_out; ++j) out.data[j] += v * wrow[j];
    }
    return out;
}

template <typename T>
void dense_backward(const TensorT<T>& in, const TensorT<T>& weight, const TensorT<T>& dout,
                    TensorT<T>& din, TensorT<T>& dweight, TensorT<T>& dbias) {
    const int n_in = weight.shape[0], n_out = weight.shape[1];
    din = TensorT<T>({n_in});
    for (int j = 0; j < n_out; ++j) dbias.data[j] += dout.data[j];
    for (int i = 0; i < n_in; ++i) {
        const T v = in.data[i];
        const T* wrow = weight.data.data() + static_cast<size_t>(i) * n_out;
        T* dwrow = dweight.data.data() + static_cast<size_t>(i) * n_out;
        T acc = T(0);
        for (int j = 0; j < n_out; ++j) {
            dwrow[j] += v * dout.data[j];
            acc += wrow[j] * dout.data[j];
        }
        din.data[i] = acc;
    }
}

// Max-subtracted softmax: finite inputs can never overflow, and the result is
// invariant under adding a constant to every logit.
template <typename T>
TensorT<T> softmax(const TensorT<T>& in) {
    TensorT<T> out = in;
    T mx = in.data[0];
    for (const T& v : in.data) mx = std::max(mx, v);
    T sum = T(0);
    for (size_t i = 0; i < in.data.size(); ++i) {
        out.data[i] = std::exp(in.data[i] - mx);
        sum += out.data[i];
    }
    for (T& v : out.data) v /= sum;
    return out;
}

template <typename T>
struct DropoutResult {
    TensorT<T> out;
    TensorT<T> mask;  // 0 for dropped units, 1/(1-rate) for survivors
};

// Inverted dropout: identity at inference, survivor scaling at train time so
// the expected activation is unchanged.
template <typename T>
DropoutResult<T> dropout_forward(const TensorT<T>& in, float rate, Mode mode, Rng& rng) {
    DropoutResult<T> r{in, TensorT<T>(in.shape, T(1))};
    if (mode == Mode::Infer || rate == 0.0f) return r;
    const T keep_scale = T(1) / (T(1) - static_cast<T>(rate));
    for (size_t i = 0; i < r.out.data.size(); ++i) {
        if (rng.uniform() < rate) {
            r.mask.data[i] = T(0);
            r.out.data[i] = T(0);
        } else {
            r.mask.data[i] = keep_scale;
            r.out.data[i] *= keep_scale;
        }
    }
    return r;
}

struct PredictedClass {
    int index = 0;
    std::vector<float> onehot;
};

// Argmax with lowest-index tie-break.
template <typename T>
PredictedClass predict_class(const TensorT<T>& probs) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(probs.data.size()); ++i)
        if (probs.data[i] > probs.data[best]) best = i;
    PredictedClass p;
    p.index = best;
    p.onehot.assign(probs.data.size(), 0.0f);
    p.onehot[best] = 1.0f;
    return p;
}

}  // namespace fer
