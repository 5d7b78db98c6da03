#pragma once

// Network and optimizer (de)serialization. Parameter blobs are base64-encoded
// little-endian IEEE-754 doubles.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reinmotion/nn/adamw.hpp"
#include "reinmotion/nn/dense_net.hpp"

namespace reinmotion::nn {

static_assert(std::endian::native == std::endian::little, "parameter blobs assume a little-endian host");

inline std::string base64_encode(std::string_view bytes) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t n = (std::uint8_t(bytes[i]) << 16) | (std::uint8_t(bytes[i + 1]) << 8) | std::uint8_t(bytes[i + 2]);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    if (const std::size_t rest = bytes.size() - i; rest > 0) {
        std::uint32_t n = std::uint8_t(bytes[i]) << 16;
        if (rest == 2) n |= std::uint8_t(bytes[i + 1]) << 8;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

inline std::string base64_decode(std::string_view text) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) throw std::invalid_argument("base64: length is not a multiple of 4");
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::array<int, 4> v{};
        int pad = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            if (text[i + k] == '=' && i + 4 == text.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else {
                v[k] = value(text[i + k]);
                if (v[k] < 0 || pad > 0) throw std::invalid_argument("base64: invalid character");
            }
        }
        const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out += static_cast<char>((n >> 16) & 0xFF);
        if (pad < 2) out += static_cast<char>((n >> 8) & 0xFF);
        if (pad < 1) out += static_cast<char>(n & 0xFF);
    }
    return out;
}

inline std::string encode_doubles(const std::vector<double>& values) {
    std::string bytes(values.size() * sizeof(double), '\0');
    std::memcpy(bytes.data(), values.data(), bytes.size());
    return base64_encode(bytes);
}

inline std::vector<double> decode_doubles(const std::string& text, std::size_t expected, const std::string& what) {
    const std::string bytes = base64_decode(text);
    if (bytes.size() != expected * sizeof(double)) {
        throw std::invalid_argument("checkpoint: " + what + " holds " + std::to_string(bytes.size() / sizeof(double)) +
                                    " values, expected " + std::to_string(expected));
    }
    std::vector<double> out(expected);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

inline nlohmann::json layers_to_json(const std::vector<LayerParams>& layers) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& l : layers) {
        out.push_back({{"weight", encode_doubles(l.weight)}, {"bias", encode_doubles(l.bias)}});
    }
    return out;
}

inline void layers_from_json(const nlohmann::json& j, std::vector<LayerParams>& layers, const std::string& what) {
    if (!j.is_array() || j.size() != layers.size()) {
        throw std::invalid_argument("checkpoint: " + what + " layer count mismatch");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string name = what + " layer " + std::to_string(l);
        layers[l].weight = decode_doubles(j[l].at("weight").get<std::string>(), layers[l].weight.size(), name + " weight");
        layers[l].bias = decode_doubles(j[l].at("bias").get<std::string>(), layers[l].bias.size(), name + " bias");
    }
}

inline nlohmann::json network_to_json(const DenseNet& net) {
    return {{"widths", net.widths()}, {"activation", to_string(net.activation())}, {"layers", layers_to_json(net.layers())}};
}

inline DenseNet network_from_json(const nlohmann::json& j) {
    DenseNet net(j.at("widths").get<std::vector<std::size_t>>(), activation_from_string(j.at("activation").get<std::string>()));
    layers_from_json(j.at("layers"), net.layers(), "network");
    return net;
}

inline nlohmann::json optimizer_to_json(const AdamWState& s) {
    return {{"learning_rate", s.hyper.learning_rate},
            {"beta1", s.hyper.beta1},
            {"beta2", s.hyper.beta2},
            {"epsilon", s.hyper.epsilon},
            {"weight_decay", s.hyper.weight_decay},
            {"step", s.step},
            {"first_moment", layers_to_json(s.first_moment)},
            {"second_moment", layers_to_json(s.second_moment)}};
}

inline AdamWState optimizer_from_json(const nlohmann::json& j, const DenseNet& net) {
    AdamWState s = AdamWState::for_network(net);
    s.hyper.learning_rate = j.at("learning_rate").get<double>();
    s.hyper.beta1 = j.at("beta1").get<double>();
    s.hyper.beta2 = j.at("beta2").get<double>();
    s.hyper.epsilon = j.at("epsilon").get<double>();
    s.hyper.weight_decay = j.at("weight_decay").get<double>();
    s.step = j.at("step").get<std::uint64_t>();
    layers_from_json(j.at("first_moment"), s.first_moment, "first moment");
    layers_from_json(j.at("second_moment"), s.second_moment, "second moment");
    return s;
}

}  // namespace reinmotion::nn
