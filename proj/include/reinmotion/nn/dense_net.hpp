#pragma once

// Fully connected network with exact reverse-mode gradients.
//
// Layer l maps width[l] -> width[l + 1]; the activation is applied between
// layers and never on the output. Weights are stored row-major [out][in].

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reinmotion/nn/ndarray.hpp"

namespace reinmotion::nn {

enum class Activation { relu, silu };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "silu"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "silu") return Activation::silu;
    throw std::invalid_argument("unknown activation \"" + s + "\"");
}

struct LayerParams {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;  // out * in, row-major
    std::vector<double> bias;    // out

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Parameter-shaped gradient container.
struct Gradients {
    std::vector<LayerParams> layers;

    void add_scaled(const Gradients& other, double scale) {
        if (other.layers.size() != layers.size()) throw std::invalid_argument("gradients: layer count mismatch");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& a = layers[l];
            const auto& b = other.layers[l];
            if (a.weight.size() != b.weight.size() || a.bias.size() != b.bias.size()) {
                throw std::invalid_argument("gradients: shape mismatch at layer " + std::to_string(l));
            }
            for (std::size_t i = 0; i < a.weight.size(); ++i) a.weight[i] += scale * b.weight[i];
            for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += scale * b.bias[i];
        }
    }

    void scale(double s) {
        for (auto& layer : layers) {
            for (double& w : layer.weight) w *= s;
            for (double& b : layer.bias) b *= s;
        }
    }
};

class DenseNet {
public:
    DenseNet() = default;

    /// Zero-initialized network.
    DenseNet(std::vector<std::size_t> widths, Activation activation)
        : widths_(std::move(widths)), activation_(activation) {
        if (widths_.size() < 2) throw std::invalid_argument("DenseNet: need at least input and output widths");
        for (std::size_t w : widths_) {
            if (w == 0) throw std::invalid_argument("DenseNet: widths must be positive");
        }
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            LayerParams p;
            p.in = widths_[l];
            p.out = widths_[l + 1];
            p.weight.assign(p.in * p.out, 0.0);
            p.bias.assign(p.out, 0.0);
            layers_.push_back(std::move(p));
        }
    }

    /// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights and biases, seeded.
    static DenseNet initialized(std::vector<std::size_t> widths, Activation activation, std::uint64_t seed) {
        DenseNet net(std::move(widths), activation);
        std::mt19937_64 rng(seed);
        for (auto& layer : net.layers_) {
            const double bound = std::sqrt(1.0 / static_cast<double>(layer.in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (double& w : layer.weight) w = dist(rng);
            for (double& b : layer.bias) b = dist(rng);
        }
        return net;
    }

    const std::vector<std::size_t>& widths() const noexcept { return widths_; }
    Activation activation() const noexcept { return activation_; }
    std::size_t input_width() const { return widths_.front(); }
    std::size_t output_width() const { return widths_.back(); }
    std::size_t layer_count() const noexcept { return layers_.size(); }

    const std::vector<LayerParams>& layers() const noexcept { return layers_; }
    std::vector<LayerParams>& layers() noexcept { return layers_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
        return n;
    }

    Gradients zero_gradients() const {
        Gradients g;
        g.layers = layers_;
        for (auto& l : g.layers) {
            std::fill(l.weight.begin(), l.weight.end(), 0.0);
            std::fill(l.bias.begin(), l.bias.end(), 0.0);
        }
        return g;
    }

    void validate() const {
        if (layers_.size() + 1 != widths_.size()) throw std::invalid_argument("DenseNet: layer count mismatch");
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& p = layers_[l];
            if (p.in != widths_[l] || p.out != widths_[l + 1] || p.weight.size() != p.in * p.out ||
                p.bias.size() != p.out) {
                throw std::invalid_argument("DenseNet: parameter shapes inconsistent at layer " + std::to_string(l));
            }
        }
    }

    friend bool operator==(const DenseNet&, const DenseNet&) = default;

private:
    std::vector<std::size_t> widths_;
    Activation activation_ = Activation::silu;
    std::vector<LayerParams> layers_;
};

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void activate(RowMatrix& z, Activation a) {
    if (a == Activation::relu) {
        z = z.cwiseMax(0.0);
    } else {
        z = z.unaryExpr([](double v) { return v * sigmoid(v); });
    }
}

inline double activation_derivative(double z, Activation a) {
    if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    const double s = sigmoid(z);
    return s * (1.0 + z * (1.0 - s));
}

}  // namespace detail

/// Intermediate values of one forward pass, consumed by `backward`.
struct ForwardTape {
    std::vector<detail::RowMatrix> inputs;           // input to each layer
    std::vector<detail::RowMatrix> pre_activations;  // pre-activation of each hidden layer
    NdArray output;
};

inline ForwardTape forward_tape(const DenseNet& net, const NdArray& input) {
    if (input.rank() != 2 || input.cols() != net.input_width()) {
        throw std::invalid_argument("forward: input last dimension " +
                                    std::to_string(input.rank() == 2 ? input.cols() : 0) +
                                    " does not match network input width " + std::to_string(net.input_width()));
    }
    ForwardTape tape;
    const std::size_t batch = input.rows();
    detail::RowMatrix a = detail::ConstRowMap(input.data(), batch, input.cols());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& p = net.layers()[l];
        detail::ConstRowMap w(p.weight.data(), p.out, p.in);
        Eigen::Map<const Eigen::RowVectorXd> b(p.bias.data(), p.out);
        detail::RowMatrix z = a * w.transpose();
        z.rowwise() += b;
        tape.inputs.push_back(std::move(a));
        if (l + 1 < net.layer_count()) {
            tape.pre_activations.push_back(z);
            detail::activate(z, net.activation());
        }
        a = std::move(z);
    }
    tape.output = NdArray::matrix(batch, net.output_width());
    detail::RowMap(tape.output.data(), batch, net.output_width()) = a;
    return tape;
}

/// Batched forward pass over the leading dimension of a [batch, input_width] array.
inline NdArray forward(const DenseNet& net, const NdArray& input) { return forward_tape(net, input).output; }

/// Gradients of <upstream, forward(net, input)> with respect to every parameter.
inline Gradients backward(const DenseNet& net, const ForwardTape& tape, const NdArray& upstream) {
    if (upstream.shape() != tape.output.shape()) {
        throw std::invalid_argument("backward: upstream shape does not match forward output shape");
    }
    Gradients grads = net.zero_gradients();
    const std::size_t batch = upstream.rows();
    detail::RowMatrix g = detail::ConstRowMap(upstream.data(), batch, upstream.cols());
    for (std::size_t l = net.layer_count(); l-- > 0;) {
        const auto& p = net.layers()[l];
        if (l + 1 < net.layer_count()) {
            const auto& z = tape.pre_activations[l];
            const Activation act = net.activation();
            g = g.cwiseProduct(z.unaryExpr([act](double v) { return detail::activation_derivative(v, act); }));
        }
        auto& gl = grads.layers[l];
        detail::RowMap(gl.weight.data(), p.out, p.in).noalias() = g.transpose() * tape.inputs[l];
        Eigen::Map<Eigen::RowVectorXd>(gl.bias.data(), p.out) = g.colwise().sum();
        if (l > 0) {
            detail::ConstRowMap w(p.weight.data(), p.out, p.in);
            detail::RowMatrix next = g * w;
            g = std::move(next);
        }
    }
    return grads;
}

inline Gradients backward(const DenseNet& net, const NdArray& input, const NdArray& upstream) {
    return backward(net, forward_tape(net, input), upstream);
}

}  // namespace reinmotion::nn
