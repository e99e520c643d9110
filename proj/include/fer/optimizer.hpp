#pragma once

#include <cmath>
#include <map>
#include <string>

#include "fer/network.hpp"
#include "fer/tensor.hpp"

namespace fer {

// First/second moment estimates, one tensor per parameter. t counts completed
// steps and drives the bias correction.
template <typename T>
struct AdamStateT {
    std::map<std::string, TensorT<T>> m, v;
    int64_t t = 0;

    template <typename Params>
    static AdamStateT init(const Params& params) {
        AdamStateT s;
        for (const auto& [name, p] : params) {
            s.m[name] = TensorT<T>(p.shape);
            s.v[name] = TensorT<T>(p.shape);
        }
        return s;
    }
};

using AdamState = AdamStateT<float>;

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), with bias-corrected
// moments. Moment math runs in double and is rounded once per write, keeping
// the update identical regardless of how parameters are grouped into tensors.
template <typename T>
void adam_step(std::map<std::string, TensorT<T>>& params, const std::map<std::string, TensorT<T>>& grads,
               AdamStateT<T>& state, const AdamConfig& cfg = {}) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (auto& [name, p] : params) {
        const TensorT<T>& g = grads.at(name);
        if (!same_shape(p, g))
            throw ShapeError("adam_step: gradient shape " + shape_str(g.shape) + " != param shape " +
                             shape_str(p.shape) + " for " + name);
        TensorT<T>& m = state.m.at(name);
        TensorT<T>& v = state.v.at(name);
        for (size_t i = 0; i < p.data.size(); ++i) {
            const double gi = static_cast<double>(g.data[i]);
            const double mi = cfg.beta1 * static_cast<double>(m.data[i]) + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * static_cast<double>(v.data[i]) + (1.0 - cfg.beta2) * gi * gi;
            m.data[i] = static_cast<T>(mi);
            v.data[i] = static_cast<T>(vi);
            const double update = cfg.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps);
            p.data[i] = static_cast<T>(static_cast<double>(p.data[i]) - update);
        }
    }
}

// Convenience wrapper that also advances the network's step counter so
// outstanding forward traces are invalidated.
template <typename T>
void adam_step(NetworkT<T>& net, AdamStateT<T>& state, const AdamConfig& cfg = {}) {
    adam_step(net.params, net.grads, state, cfg);
    net.step_counter += 1;
}

}  // namespace fer
