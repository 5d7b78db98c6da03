#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "reinmotion/nn/dense_net.hpp"

namespace reinmotion::nn {

struct AdamWHyperParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-2;
};

struct AdamWState {
    AdamWHyperParams hyper;
    std::vector<LayerParams> first_moment;
    std::vector<LayerParams> second_moment;
    std::uint64_t step = 0;

    static AdamWState for_network(const DenseNet& net, AdamWHyperParams hyper = {}) {
        AdamWState s;
        s.hyper = hyper;
        s.first_moment = net.zero_gradients().layers;
        s.second_moment = s.first_moment;
        return s;
    }
};

/// One decoupled-weight-decay Adam update:
///   p <- p - lr * wd * p
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
inline void adamw_step(AdamWState& state, DenseNet& net, const Gradients& grads) {
    auto& layers = net.layers();
    if (grads.layers.size() != layers.size() || state.first_moment.size() != layers.size() ||
        state.second_moment.size() != layers.size()) {
        throw std::invalid_argument("adamw_step: layer count mismatch");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& g = grads.layers[l];
        if (g.weight.size() != layers[l].weight.size() || g.bias.size() != layers[l].bias.size() ||
            state.first_moment[l].weight.size() != layers[l].weight.size()) {
            throw std::invalid_argument("adamw_step: shape mismatch at layer " + std::to_string(l));
        }
        for (double v : g.weight) {
            if (!std::isfinite(v)) throw std::runtime_error("adamw_step: non-finite gradient in layer " + std::to_string(l) + " weight");
        }
        for (double v : g.bias) {
            if (!std::isfinite(v)) throw std::runtime_error("adamw_step: non-finite gradient in layer " + std::to_string(l) + " bias");
        }
    }

    ++state.step;
    const auto& h = state.hyper;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(h.beta1, t);
    const double correction2 = 1.0 - std::pow(h.beta2, t);
    const double decay = 1.0 - h.learning_rate * h.weight_decay;

    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] *= decay;
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double m_hat = correction1 > 0.0 ? m[i] / correction1 : m[i];
            const double v_hat = correction2 > 0.0 ? v[i] / correction2 : v[i];
            p[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
        }
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weight, grads.layers[l].weight, state.first_moment[l].weight, state.second_moment[l].weight);
        update(layers[l].bias, grads.layers[l].bias, state.first_moment[l].bias, state.second_moment[l].bias);
    }
}

}  // namespace reinmotion::nn
