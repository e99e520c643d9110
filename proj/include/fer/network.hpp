#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fer/layers.hpp"
#include "fer/parallel.hpp"
#include "fer/rng.hpp"
#include "fer/tensor.hpp"

namespace fer {

// Layer stack with bound parameters and same-shaped gradient buffers.
// step_counter advances on every optimizer write; forward traces remember the
// value they were built against so a stale trace cannot be replayed.
template <typename T>
struct NetworkT {
    NetworkSpec spec;
    std::vector<std::string> layer_param_base;  // "" for parameterless layers
    std::map<std::string, TensorT<T>> params;
    std::map<std::string, TensorT<T>> grads;
    Mode mode = Mode::Infer;
    uint64_t step_counter = 0;

    int num_classes() const { return spec.layers.back().units; }
};

using Network = NetworkT<float>;

// Glorot-uniform fan-based initialization, biases zero. Each parameter tensor
// draws from its own seeded stream, so adding layers does not reshuffle the
// initialization of earlier ones.
template <typename T = float>
NetworkT<T> make_network(const NetworkSpec& spec, uint64_t seed) {
    const std::vector<Shape> shapes = infer_shapes(spec);
    NetworkT<T> net;
    net.spec = spec;
    Shape cur = spec.input_shape;
    int conv_idx = 0, dense_idx = 0, param_idx = 0;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        std::string base;
        if (layer.kind == LayerKind::Conv2D) {
            base = "conv2d_" + std::to_string(conv_idx++);
            const int cin = cur[2], cout = layer.units;
            TensorT<T> kernel({3, 3, cin, cout});
            const double limit = std::sqrt(6.0 / (9.0 * cin + 9.0 * cout));
            Rng rng(mix_seed(seed, 0x6b65726eull, static_cast<uint64_t>(param_idx++)));
            for (T& v : kernel.data) v = static_cast<T>(rng.uniform(-limit, limit));
            net.params[base + ".kernel"] = std::move(kernel);
            net.params[base + ".bias"] = TensorT<T>({cout});
        } else if (layer.kind == LayerKind::Dense) {
            base = "dense_" + std::to_string(dense_idx++);
            const int n_in = cur[0], n_out = layer.units;
            TensorT<T> weight({n_in, n_out});
            const double limit = std::sqrt(6.0 / (n_in + n_out));
            Rng rng(mix_seed(seed, 0x6b65726eull, static_cast<uint64_t>(param_idx++)));
            for (T& v : weight.data) v = static_cast<T>(rng.uniform(-limit, limit));
            net.params[base + ".weight"] = std::move(weight);
            net.params[base + ".bias"] = TensorT<T>({n_out});
        }
        net.layer_param_base.push_back(base);
        cur = shapes[i];
    }
    for (const auto& [name, p] : net.params) net.grads[name] = TensorT<T>(p.shape);
    return net;
}

template <typename T>
void zero_grads(NetworkT<T>& net) {
    for (auto& [name, g] : net.grads) g.fill(T(0));
}

// Per-layer caches needed by the backward pass: post-activation outputs,
// maxpool winner indices, dropout masks.
template <typename T>
struct SampleTrace {
    TensorT<T> input;
    std::vector<TensorT<T>> outputs;
    std::vector<std::vector<int32_t>> argmax;
    std::vector<TensorT<T>> masks;
};

template <typename T>
struct ForwardTraceT {
    Mode mode = Mode::Infer;
    uint64_t step_marker = 0;
    std::vector<SampleTrace<T>> samples;
};

using ForwardTrace = ForwardTraceT<float>;

namespace detail {

template <typename T>
TensorT<T> apply_activation(const LayerSpec& layer, TensorT<T>&& x) {
    switch (layer.activation) {
        case Activation::ReLU: return relu(x);
        case Activation::Softmax: return softmax(x);
        case Activation::None: break;
    }
    return std::move(x);
}

}  // namespace detail

// Runs one [H,W,C] sample through the stack. dropout_seed feeds the dropout
// masks in Train mode; each dropout layer derives its own stream from it.
template <typename T>
TensorT<T> forward_sample(const NetworkT<T>& net, const TensorT<T>& x, Mode mode,
                          uint64_t dropout_seed = 0, SampleTrace<T>* trace = nullptr) {
    require_shape(x, net.spec.input_shape, "forward_sample input");
    if (trace) {
        trace->input = x;
        trace->outputs.clear();
        trace->argmax.assign(net.spec.layers.size(), {});
        trace->masks.assign(net.spec.layers.size(), TensorT<T>());
    }
    TensorT<T> cur = x;
    for (size_t i = 0; i < net.spec.layers.size(); ++i) {
        const LayerSpec& layer = net.spec.layers[i];
        switch (layer.kind) {
            case LayerKind::Rescaling:
                for (T& v : cur.data) v *= static_cast<T>(layer.scale);
                break;
            case LayerKind::Augment:
                break;  // identity inside the network; augmentation is a dataset concern
            case LayerKind::Conv2D: {
                const std::string& base = net.layer_param_base[i];
                cur = detail::apply_activation(
                    layer, conv2d_forward(cur, net.params.at(base + ".kernel"), net.params.at(base + ".bias")));
                break;
            }
            case LayerKind::MaxPool2D: {
                PoolResult<T> r = maxpool_forward(cur);
                cur = std::move(r.out);
                if (trace) trace->argmax[i] = std::move(r.argmax);
                break;
            }
            case LayerKind::Dropout: {
                if (mode == Mode::Train) {
                    Rng rng(mix_seed(dropout_seed, 0x64726f70ull, i));
                    DropoutResult<T> r = dropout_forward(cur, layer.rate, mode, rng);
                    cur = std::move(r.out);
                    if (trace) trace->masks[i] = std::move(r.mask);
                }
                break;
            }
            case LayerKind::Flatten:
                cur.shape = {static_cast<int>(cur.size())};
                break;
            case LayerKind::Dense: {
                const std::string& base = net.layer_param_base[i];
                cur = detail::apply_activation(
                    layer, dense_forward(cur, net.params.at(base + ".weight"), net.params.at(base + ".bias")));
                break;
            }
        }
        if (trace) trace->outputs.push_back(cur);
    }
    return cur;
}

// Backward for one traced sample, accumulating parameter gradients into the
// supplied map. For a Softmax-activated final layer the incoming gradient is
// taken with respect to the pre-softmax logits (the fused softmax+CE form);
// for every other activation it is with respect to the layer output.
template <typename T>
TensorT<T> backward_sample(const NetworkT<T>& net, const SampleTrace<T>& trace,
                           const TensorT<T>& loss_grad, std::map<std::string, TensorT<T>>& grad_acc) {
    TensorT<T> d = loss_grad;
    for (int i = static_cast<int>(net.spec.layers.size()) - 1; i >= 0; --i) {
        const LayerSpec& layer = net.spec.layers[i];
        const TensorT<T>& in = i == 0 ? trace.input : trace.outputs[i - 1];
        switch (layer.kind) {
            case LayerKind::Rescaling:
                for (T& v : d.data) v *= static_cast<T>(layer.scale);
                break;
            case LayerKind::Augment:
                break;
            case LayerKind::Conv2D: {
                if (layer.activation == Activation::ReLU) d = relu_backward(trace.outputs[i], d);
                const std::string& base = net.layer_param_base[i];
                TensorT<T> din;
                conv2d_backward(in, net.params.at(base + ".kernel"), d, din, grad_acc.at(base + ".kernel"),
                                grad_acc.at(base + ".bias"));
                d = std::move(din);
                break;
            }
            case LayerKind::MaxPool2D: {
                TensorT<T> din(in.shape);
                maxpool_backward(trace.argmax[i], d, din);
                d = std::move(din);
                break;
            }
            case LayerKind::Dropout:
                if (trace.masks[i].size() > 0)
                    for (size_t k = 0; k < d.data.size(); ++k) d.data[k] *= trace.masks[i].data[k];
                break;
            case LayerKind::Flatten:
                d.shape = in.shape;
                break;
            case LayerKind::Dense: {
                if (layer.activation == Activation::ReLU) d = relu_backward(trace.outputs[i], d);
                // Softmax: d already holds dLoss/dLogits, no Jacobian needed here
                const std::string& base = net.layer_param_base[i];
                TensorT<T> din;
                TensorT<T> flat_in = in;
                flat_in.shape = {static_cast<int>(in.size())};
                dense_backward(flat_in, net.params.at(base + ".weight"), d, din, grad_acc.at(base + ".weight"),
                               grad_acc.at(base + ".bias"));
                d = std::move(din);
                break;
            }
        }
    }
    return d;
}

template <typename T>
struct ForwardResult {
    TensorT<T> probs;  // [N, classes]
    ForwardTraceT<T> trace;
};

// Batch forward. Rows of probs sum to 1; the trace is populated only in Train
// mode. Per-sample dropout streams derive from (seed, sample index) so the
// result does not depend on evaluation order.
template <typename T>
ForwardResult<T> network_forward(const NetworkT<T>& net, const TensorT<T>& batch, uint64_t seed = 0,
                                 int n_threads = 0) {
    if (batch.shape.size() != net.spec.input_shape.size() + 1)
        throw ShapeError("network_forward: batch must be [N" +
                         shape_str(net.spec.input_shape).substr(1) + ", got " + shape_str(batch.shape));
    for (size_t i = 0; i < net.spec.input_shape.size(); ++i)
        if (batch.shape[i + 1] != net.spec.input_shape[i])
            throw ShapeError("network_forward: batch " + shape_str(batch.shape) +
                             " does not match input shape " + shape_str(net.spec.input_shape));
    const int n = batch.shape[0];
    const int64_t sample_len = shape_size(net.spec.input_shape);
    const int classes = net.num_classes();

    ForwardResult<T> result{TensorT<T>({n, classes}), {}};
    result.trace.mode = net.mode;
    result.trace.step_marker = net.step_counter;
    if (net.mode == Mode::Train) result.trace.samples.resize(static_cast<size_t>(n));

    parallel_lanes(n, kGradLanes, n_threads, [&](int, int64_t i) {
        TensorT<T> x(net.spec.input_shape);
        std::copy_n(batch.data.begin() + i * sample_len, sample_len, x.data.begin());
        SampleTrace<T>* tr = net.mode == Mode::Train ? &result.trace.samples[static_cast<size_t>(i)] : nullptr;
        TensorT<T> probs =
            forward_sample(net, x, net.mode, mix_seed(seed, 0x73616d70ull, static_cast<uint64_t>(i)), tr);
        std::copy_n(probs.data.begin(), classes, result.probs.data.begin() + i * classes);
    });
    return result;
}

// Batch backward: overwrites net.grads with gradients accumulated over the
// traced samples and returns the per-sample input gradients. Accumulation
// runs on fixed lanes reduced in lane order, so any thread count produces
// bit-identical sums.
template <typename T>
TensorT<T> network_backward(NetworkT<T>& net, const ForwardTraceT<T>& trace, const TensorT<T>& loss_grad,
                            int n_threads = 0) {
    if (trace.mode != Mode::Train || trace.samples.empty())
        throw StateError("network_backward: trace missing; run a Train-mode forward first");
    if (trace.step_marker != net.step_counter)
        throw StateError("network_backward: trace is stale; parameters changed since the forward pass");
    const int n = static_cast<int>(trace.samples.size());
    const int classes = net.num_classes();
    require_shape(loss_grad, {n, classes}, "network_backward loss gradient");

    zero_grads(net);
    std::vector<std::map<std::string, TensorT<T>>> lane_grads(kGradLanes);
    for (auto& lg : lane_grads)
        for (const auto& [name, g] : net.grads) lg[name] = TensorT<T>(g.shape);

    Shape in_batch_shape = net.spec.input_shape;
    in_batch_shape.insert(in_batch_shape.begin(), n);
    TensorT<T> input_grads(in_batch_shape);
    const int64_t sample_len = shape_size(net.spec.input_shape);

    parallel_lanes(n, kGradLanes, n_threads, [&](int lane, int64_t i) {
        TensorT<T> dvec({classes});
        std::copy_n(loss_grad.data.begin() + i * classes, classes, dvec.data.begin());
        TensorT<T> din = backward_sample(net, trace.samples[static_cast<size_t>(i)], dvec, lane_grads[lane]);
        std::copy_n(din.data.begin(), sample_len, input_grads.data.begin() + i * sample_len);
    });

    for (int lane = 0; lane < kGradLanes; ++lane)
        for (auto& [name, g] : net.grads) {
            const TensorT<T>& lg = lane_grads[lane].at(name);
            for (size_t k = 0; k < g.data.size(); ++k) g.data[k] += lg.data[k];
        }
    return input_grads;
}

}  // namespace fer
