#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "fer/augment.hpp"
#include "fer/dataset.hpp"
#include "fer/metrics.hpp"
#include "fer/network.hpp"
#include "fer/optimizer.hpp"
#include "fer/parallel.hpp"

namespace fer {

// Categorical cross-entropy, mean over the batch, probabilities clamped at
// 1e-12 before the log. The returned gradient is with respect to the softmax
// logits: (probs - onehot) / N, the numerically stable joint form.
template <typename T>
struct CrossEntropyResultT {
    double loss = 0.0;
    TensorT<T> dlogits;
};

using CrossEntropyResult = CrossEntropyResultT<float>;

template <typename T>
CrossEntropyResultT<T> cross_entropy(const TensorT<T>& probs, const TensorT<T>& onehot) {
    if (probs.shape.size() != 2 || probs.shape != onehot.shape)
        throw ShapeError("cross_entropy: probs " + shape_str(probs.shape) + " vs onehot " +
                         shape_str(onehot.shape));
    const int n = probs.shape[0], k = probs.shape[1];
    CrossEntropyResultT<T> r;
    r.dlogits = TensorT<T>(probs.shape);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) {
            const size_t at = static_cast<size_t>(i) * k + j;
            r.dlogits.data[at] = (probs.data[at] - onehot.data[at]) / static_cast<T>(n);
            if (onehot.data[at] != T(0))
                loss -= static_cast<double>(onehot.data[at]) *
                        std::log(std::max(static_cast<double>(probs.data[at]), 1e-12));
        }
    }
    r.loss = loss / n;
    return r;
}

template <typename T>
TensorT<T> onehot_labels(const std::vector<int>& labels, int classes = kNumClasses) {
    TensorT<T> t({static_cast<int>(labels.size()), classes});
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw RangeError("label " + std::to_string(labels[i]) + " outside 0.." + std::to_string(classes - 1));
        t.data[i * classes + static_cast<size_t>(labels[i])] = T(1);
    }
    return t;
}

struct TrainConfig {
    int batch_size = 120;
    int epochs = 80;
    double learning_rate = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    uint64_t seed = 0;
    bool augment = true;
    AugmentPolicy augment_policy{};
    int threads = 0;  // 0 = all hardware threads; results do not depend on it

    AdamConfig adam() const { return {learning_rate, beta1, beta2, eps}; }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0, train_accuracy = 0.0;
    double val_loss = 0.0, val_accuracy = 0.0;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<int> predictions;
};

// Inference pass over a whole dataset: mean cross-entropy, accuracy and the
// argmax predictions. Per-sample losses are reduced in index order.
template <typename T>
EvalResult evaluate(const NetworkT<T>& net, const Dataset& data, int n_threads = 0) {
    if (data.empty()) throw DataError("evaluate: empty dataset");
    const int n = static_cast<int>(data.size());
    std::vector<double> losses(static_cast<size_t>(n));
    std::vector<int> preds(static_cast<size_t>(n));
    parallel_lanes(n, kGradLanes, n_threads, [&](int, int64_t i) {
        const TensorT<T> x = sample_to_tensor<T>(data.samples[static_cast<size_t>(i)]);
        const TensorT<T> probs = forward_sample(net, x, Mode::Infer);
        const int label = data.samples[static_cast<size_t>(i)].label;
        losses[static_cast<size_t>(i)] =
            -std::log(std::max(static_cast<double>(probs.data[static_cast<size_t>(label)]), 1e-12));
        preds[static_cast<size_t>(i)] = predict_class(probs).index;
    });
    EvalResult r;
    r.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / n;
    int64_t correct = 0;
    for (int i = 0; i < n; ++i)
        if (preds[static_cast<size_t>(i)] == data.samples[static_cast<size_t>(i)].label) ++correct;
    r.accuracy = static_cast<double>(correct) / n;
    r.predictions = std::move(preds);
    return r;
}

namespace detail {

// One optimizer step on a batch of dataset indices: per-sample forward and
// backward on fixed lanes, gradients reduced in lane order, then Adam.
template <typename T>
void train_step(NetworkT<T>& net, AdamStateT<T>& adam, const Dataset& data,
                const std::vector<size_t>& batch_indices, const TrainConfig& cfg, int epoch) {
    const int n = static_cast<int>(batch_indices.size());
    zero_grads(net);
    std::vector<std::map<std::string, TensorT<T>>> lane_grads(kGradLanes);
    for (auto& lg : lane_grads)
        for (const auto& [name, g] : net.grads) lg[name] = TensorT<T>(g.shape);

    parallel_lanes(n, kGradLanes, cfg.threads, [&](int lane, int64_t bi) {
        const size_t sample_idx = batch_indices[static_cast<size_t>(bi)];
        const Sample& raw = data.samples[sample_idx];
        TensorT<T> x;
        if (cfg.augment && !cfg.augment_policy.is_identity()) {
            Rng rng(mix_seed(cfg.seed, 0x617567ull, static_cast<uint64_t>(epoch),
                             static_cast<uint64_t>(sample_idx)));
            x = sample_to_tensor<T>(augment(raw, cfg.augment_policy, rng));
        } else {
            x = sample_to_tensor<T>(raw);
        }
        SampleTrace<T> trace;
        const uint64_t drop_seed =
            mix_seed(cfg.seed, 0x64726f70ull, static_cast<uint64_t>(epoch), static_cast<uint64_t>(sample_idx));
        TensorT<T> probs = forward_sample(net, x, Mode::Train, drop_seed, &trace);
        // fused softmax + cross-entropy gradient, batch-mean scaling
        TensorT<T> dlogits = probs;
        dlogits.data[static_cast<size_t>(raw.label)] -= T(1);
        for (T& v : dlogits.data) v /= static_cast<T>(n);
        backward_sample(net, trace, dlogits, lane_grads[lane]);
    });

    for (int lane = 0; lane < kGradLanes; ++lane)
        for (auto& [name, g] : net.grads) {
            const TensorT<T>& lg = lane_grads[lane].at(name);
            for (size_t k = 0; k < g.data.size(); ++k) g.data[k] += lg.data[k];
        }
    adam_step(net, adam, cfg.adam());
}

}  // namespace detail

using EpochCallback = std::function<void(const EpochRecord&)>;

// Seeded mini-batch training: per epoch, shuffle, walk batches of
// cfg.batch_size (the last one may be short), augment each drawn sample,
// take an Adam step per batch, then score the train and validation sets.
// Identical seeds give bit-identical records for any thread count.
template <typename T>
std::vector<EpochRecord> train(NetworkT<T>& net, const Dataset& train_set, const Dataset& val_set,
                               const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
    if (train_set.empty()) throw DataError("train: empty training set");
    if (val_set.empty()) throw DataError("train: empty validation set");
    if (cfg.batch_size < 1) throw ArgError("train: batch_size must be >= 1");
    if (cfg.epochs < 0) throw ArgError("train: epochs must be >= 0");

    AdamStateT<T> adam = AdamStateT<T>::init(net.params);
    std::vector<EpochRecord> records;
    records.reserve(static_cast<size_t>(cfg.epochs));

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x73687566ull, static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        net.mode = Mode::Train;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            const std::vector<size_t> batch(order.begin() + static_cast<ptrdiff_t>(start),
                                            order.begin() + static_cast<ptrdiff_t>(end));
            detail::train_step(net, adam, train_set, batch, cfg, epoch);
        }
        net.mode = Mode::Infer;

        const EvalResult tr = evaluate(net, train_set, cfg.threads);
        const EvalResult va = evaluate(net, val_set, cfg.threads);
        records.push_back({epoch + 1, tr.loss, tr.accuracy, va.loss, va.accuracy});
        if (on_epoch) on_epoch(records.back());
    }
    return records;
}

inline void write_curves_csv(const std::vector<EpochRecord>& records, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    char buf[160];
    for (const EpochRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.train_accuracy,
                      r.val_loss, r.val_accuracy);
        f << buf;
    }
}

}  // namespace fer
