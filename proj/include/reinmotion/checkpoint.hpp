#pragma once

// Checkpoint documents: denoiser parameters, motion layout, schedule, policy sigma,
// optional optimizer and fine-tuning state, and the config they were produced with.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "reinmotion/diffusion.hpp"
#include "reinmotion/nn/serialize.hpp"
#include "reinmotion/train.hpp"

namespace reinmotion {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    std::string kind = "pretrained";  // or "finetuned"
    Denoiser denoiser;
    NoiseSchedule schedule;
    double sigma = 0.15;
    std::optional<nn::AdamWState> optimizer;
    nlohmann::json config = nlohmann::json::object();
    std::size_t iteration = 0;
    std::optional<std::string> rng_state;
    std::optional<nn::DenseNet> pretrained_network;  // frozen sampler, for resuming fine-tuning
    TrainLog log;
};

inline nlohmann::json layout_to_json(const MotionLayout& l) {
    return {{"joint_names", l.skeleton.joint_names},
            {"left_foot", l.skeleton.left_foot},
            {"right_foot", l.skeleton.right_foot},
            {"fps", l.skeleton.fps},
            {"ground_height", l.ground.height},
            {"frames", l.frames},
            {"flatten_order", "frame,joint,coordinate"},
            {"normalizer_mean", nn::encode_doubles(l.normalizer.mean)},
            {"normalizer_std", nn::encode_doubles(l.normalizer.stddev)}};
}

inline MotionLayout layout_from_json(const nlohmann::json& j) {
    Skeleton sk{j.at("joint_names").get<std::vector<std::string>>(), j.at("left_foot").get<std::size_t>(),
                j.at("right_foot").get<std::size_t>(), j.at("fps").get<double>()};
    MotionLayout l = MotionLayout::unnormalized(std::move(sk), GroundPlane{j.at("ground_height").get<double>()},
                                                j.at("frames").get<std::size_t>());
    l.normalizer.mean = nn::decode_doubles(j.at("normalizer_mean").get<std::string>(), l.dim(), "normalizer mean");
    l.normalizer.stddev = nn::decode_doubles(j.at("normalizer_std").get<std::string>(), l.dim(), "normalizer std");
    l.validate();
    return l;
}

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
    nlohmann::json j{{"format", "reinmotion-checkpoint"},
                     {"version", kCheckpointVersion},
                     {"kind", c.kind},
                     {"denoiser",
                      {{"network", nn::network_to_json(c.denoiser.network)},
                       {"layout", layout_to_json(c.denoiser.layout)},
                       {"class_names", c.denoiser.class_names}}},
                     {"schedule", {{"steps", c.schedule.steps()}, {"family", to_string(c.schedule.family())}}},
                     {"sigma", c.sigma},
                     {"config", c.config},
                     {"iteration", c.iteration}};
    if (c.optimizer) j["optimizer"] = nn::optimizer_to_json(*c.optimizer);
    if (c.rng_state) j["rng_state"] = *c.rng_state;
    if (c.pretrained_network) j["pretrained_network"] = nn::network_to_json(*c.pretrained_network);
    nlohmann::json log = nlohmann::json::array();
    for (const auto& r : c.log) log.push_back(to_json(r));
    j["log"] = std::move(log);
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "reinmotion-checkpoint") {
            throw std::invalid_argument("checkpoint: not a checkpoint document");
        }
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw std::invalid_argument("checkpoint: unsupported version");
        }
        Checkpoint c;
        c.kind = j.at("kind").get<std::string>();
        const auto& d = j.at("denoiser");
        c.denoiser = Denoiser{nn::network_from_json(d.at("network")), layout_from_json(d.at("layout")),
                              d.at("class_names").get<std::vector<std::string>>()};
        c.denoiser.validate();
        c.schedule = NoiseSchedule::build(j.at("schedule").at("steps").get<std::size_t>(),
                                          schedule_family_from_string(j.at("schedule").at("family").get<std::string>()));
        c.sigma = j.at("sigma").get<double>();
        c.config = j.at("config");
        c.iteration = j.at("iteration").get<std::size_t>();
        if (j.contains("optimizer")) c.optimizer = nn::optimizer_from_json(j.at("optimizer"), c.denoiser.network);
        if (j.contains("rng_state")) c.rng_state = j.at("rng_state").get<std::string>();
        if (j.contains("pretrained_network")) {
            c.pretrained_network = nn::network_from_json(j.at("pretrained_network"));
            if (c.pretrained_network->widths() != c.denoiser.network.widths()) {
                throw std::invalid_argument("checkpoint: pretrained network widths differ from the policy");
            }
        }
        for (const auto& r : j.at("log")) c.log.push_back(train_record_from_json(r));
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("checkpoint: malformed document: ") + e.what());
    }
}

inline void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(c).dump() << '\n';
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("checkpoint " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace reinmotion
