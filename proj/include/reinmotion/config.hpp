#pragma once

// Run configuration: built-in defaults, overridden by a config file, overridden by
// command-line flags. The resolved document converts into the typed configs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reinmotion/metrics.hpp"
#include "reinmotion/rewards.hpp"
#include "reinmotion/synthdata.hpp"
#include "reinmotion/train.hpp"

namespace reinmotion {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline const char* to_string(JointScope s) { return s == JointScope::all_joints ? "all_joints" : "feet_only"; }

inline JointScope joint_scope_from_string(const std::string& s) {
    if (s == "all_joints") return JointScope::all_joints;
    if (s == "feet_only") return JointScope::feet_only;
    throw ConfigError("unknown joint scope \"" + s + "\" (expected all_joints|feet_only)");
}

inline const char* to_string(FrameReduction r) { return r == FrameReduction::sum ? "sum" : "mean"; }

inline FrameReduction frame_reduction_from_string(const std::string& s) {
    if (s == "sum") return FrameReduction::sum;
    if (s == "mean") return FrameReduction::mean;
    throw ConfigError("unknown frame reduction \"" + s + "\" (expected sum|mean)");
}

inline nlohmann::ordered_json default_config() {
    const TrainConfig t;
    const PretrainConfig p;
    const RewardConfig r;
    const MetricsConfig m;
    const DatasetOptions d;
    nlohmann::ordered_json kinds = nlohmann::ordered_json::array();
    for (auto k : d.kinds) kinds.push_back(to_string(k));
    return {
        {"seed", 0},
        {"data",
         {{"n", 256},
          {"corrupt", 0.5},
          {"frames", d.frames},
          {"fps", d.fps},
          {"kinds", kinds},
          {"magnitude_min", d.magnitude_min},
          {"magnitude_max", d.magnitude_max},
          {"min_length", d.min_length},
          {"max_length", d.max_length}}},
        {"pretrain",
         {{"steps", p.steps},
          {"batch_size", p.batch_size},
          {"learning_rate", p.learning_rate},
          {"weight_decay", p.weight_decay},
          {"hidden", p.hidden},
          {"activation", nn::to_string(p.activation)},
          {"diffusion_steps", p.diffusion_steps},
          {"schedule", to_string(p.schedule)},
          {"min_std", p.min_std}}},
        {"train",
         {{"iters", t.total_steps},
          {"lambda", t.lambda},
          {"gamma", t.gamma_clip},
          {"sigma", t.sigma},
          {"learning_rate", t.learning_rate},
          {"weight_decay", t.weight_decay},
          {"inner_epochs", t.inner_epochs},
          {"batch_size", t.batch_size},
          {"normalize_rewards", t.normalize_rewards},
          {"log_timing", t.log_timing},
          {"checkpoint_every", 500}}},
        {"rewards",
         {{"clip_threshold", r.clip_threshold},
          {"float_tolerance", r.float_tolerance},
          {"contact_threshold", r.contact_threshold},
          {"clip_form", to_string(r.clip_form)},
          {"lowest_joint_scope", to_string(r.lowest_joint_scope)}}},
        {"metrics",
         {{"skate_distance_threshold", m.skate_distance_threshold},
          {"skate_contact_height", m.skate_contact_height},
          {"float_threshold", m.float_threshold},
          {"clip_threshold", m.clip_threshold},
          {"skate_horizontal_only", m.skate_horizontal_only},
          {"clip_form", to_string(m.clip_form)},
          {"reduction", to_string(m.reduction)},
          {"lowest_joint_scope", to_string(m.lowest_joint_scope)}}},
        {"sample", {{"n", 64}, {"cond", ""}, {"posterior_noise", true}}},
        {"evaluate", {{"rewards", false}}},
        {"sweep", {{"sigmas", {0.1, 0.15, 0.2, 0.25, 0.3}}}},
    };
}

namespace detail {

inline const char* json_kind(const nlohmann::ordered_json& v) {
    if (v.is_boolean()) return "boolean";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return "null";
}

inline void merge_into(nlohmann::ordered_json& base, const nlohmann::ordered_json& over, const std::string& prefix) {
    if (!over.is_object()) throw ConfigError("config: \"" + prefix + "\" must be an object");
    for (auto it = over.begin(); it != over.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("config: unknown key \"" + key + "\"");
        auto& slot = base[it.key()];
        const auto& value = it.value();
        if (slot.is_object()) {
            merge_into(slot, value, key);
            continue;
        }
        const bool compatible = (slot.is_number() && value.is_number()) || std::string(json_kind(slot)) == json_kind(value);
        if (!compatible) {
            throw ConfigError("config: key \"" + key + "\" expects a " + json_kind(slot) + ", got a " + json_kind(value));
        }
        if (slot.is_number_unsigned() || slot.is_number_integer()) {
            if (!value.is_number_integer() || (slot.is_number_unsigned() && value.get<std::int64_t>() < 0)) {
                throw ConfigError("config: key \"" + key + "\" expects a non-negative integer");
            }
        }
        slot = value;
    }
}

}  // namespace detail

/// Applies a (possibly partial) override document; unknown keys and type mismatches
/// raise ConfigError naming the dotted key.
inline void merge_config(nlohmann::ordered_json& base, const nlohmann::ordered_json& over) {
    detail::merge_into(base, over, "");
}

inline nlohmann::ordered_json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return nlohmann::ordered_json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
}

/// Sets a dotted key, e.g. set_config_value(cfg, "train.sigma", 0.1).
inline void set_config_value(nlohmann::ordered_json& cfg, const std::string& dotted, nlohmann::ordered_json value) {
    nlohmann::ordered_json over = nlohmann::ordered_json::object();
    nlohmann::ordered_json* cur = &over;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = dotted.find('.', start);
        const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (dot == std::string::npos) {
            (*cur)[part] = std::move(value);
            break;
        }
        cur = &(*cur)[part];
        start = dot + 1;
    }
    merge_config(cfg, over);
}

/// Seed from the REINMOTION_SEED environment variable, if set.
inline std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("REINMOTION_SEED");
    if (v == nullptr || *v == '\0') return std::nullopt;
    try {
        std::size_t used = 0;
        const unsigned long long s = std::stoull(v, &used);
        if (used != std::string(v).size()) throw std::invalid_argument("trailing characters");
        return s;
    } catch (const std::exception&) {
        throw ConfigError(std::string("REINMOTION_SEED: not an unsigned integer: \"") + v + "\"");
    }
}

namespace detail {

template <typename T>
T get_key(const nlohmann::ordered_json& cfg, const std::string& section, const std::string& key) {
    try {
        return cfg.at(section).at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: missing or invalid key \"" + section + "." + key + "\"");
    }
}

}  // namespace detail

inline RewardConfig reward_config_from(const nlohmann::ordered_json& cfg) {
    RewardConfig r;
    r.clip_threshold = detail::get_key<double>(cfg, "rewards", "clip_threshold");
    r.float_tolerance = detail::get_key<double>(cfg, "rewards", "float_tolerance");
    r.contact_threshold = detail::get_key<double>(cfg, "rewards", "contact_threshold");
    r.clip_form = clip_form_from_string(detail::get_key<std::string>(cfg, "rewards", "clip_form"));
    r.lowest_joint_scope = joint_scope_from_string(detail::get_key<std::string>(cfg, "rewards", "lowest_joint_scope"));
    r.validate();
    return r;
}

inline MetricsConfig metrics_config_from(const nlohmann::ordered_json& cfg) {
    MetricsConfig m;
    m.skate_distance_threshold = detail::get_key<double>(cfg, "metrics", "skate_distance_threshold");
    m.skate_contact_height = detail::get_key<double>(cfg, "metrics", "skate_contact_height");
    m.float_threshold = detail::get_key<double>(cfg, "metrics", "float_threshold");
    m.clip_threshold = detail::get_key<double>(cfg, "metrics", "clip_threshold");
    m.skate_horizontal_only = detail::get_key<bool>(cfg, "metrics", "skate_horizontal_only");
    m.clip_form = clip_form_from_string(detail::get_key<std::string>(cfg, "metrics", "clip_form"));
    m.reduction = frame_reduction_from_string(detail::get_key<std::string>(cfg, "metrics", "reduction"));
    m.lowest_joint_scope = joint_scope_from_string(detail::get_key<std::string>(cfg, "metrics", "lowest_joint_scope"));
    m.validate();
    return m;
}

inline std::uint64_t seed_from(const nlohmann::ordered_json& cfg) {
    try {
        return cfg.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: \"seed\" must be a non-negative integer");
    }
}

inline TrainConfig train_config_from(const nlohmann::ordered_json& cfg) {
    TrainConfig t;
    t.total_steps = detail::get_key<std::size_t>(cfg, "train", "iters");
    t.lambda = detail::get_key<double>(cfg, "train", "lambda");
    t.gamma_clip = detail::get_key<double>(cfg, "train", "gamma");
    t.sigma = detail::get_key<double>(cfg, "train", "sigma");
    t.learning_rate = detail::get_key<double>(cfg, "train", "learning_rate");
    t.weight_decay = detail::get_key<double>(cfg, "train", "weight_decay");
    t.inner_epochs = detail::get_key<std::size_t>(cfg, "train", "inner_epochs");
    t.batch_size = detail::get_key<std::size_t>(cfg, "train", "batch_size");
    t.normalize_rewards = detail::get_key<bool>(cfg, "train", "normalize_rewards");
    t.log_timing = detail::get_key<bool>(cfg, "train", "log_timing");
    t.seed = seed_from(cfg);
    t.rewards = reward_config_from(cfg);
    t.metrics = metrics_config_from(cfg);
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return t;
}

inline PretrainConfig pretrain_config_from(const nlohmann::ordered_json& cfg) {
    PretrainConfig p;
    p.steps = detail::get_key<std::size_t>(cfg, "pretrain", "steps");
    p.batch_size = detail::get_key<std::size_t>(cfg, "pretrain", "batch_size");
    p.learning_rate = detail::get_key<double>(cfg, "pretrain", "learning_rate");
    p.weight_decay = detail::get_key<double>(cfg, "pretrain", "weight_decay");
    p.hidden = detail::get_key<std::vector<std::size_t>>(cfg, "pretrain", "hidden");
    p.activation = nn::activation_from_string(detail::get_key<std::string>(cfg, "pretrain", "activation"));
    p.diffusion_steps = detail::get_key<std::size_t>(cfg, "pretrain", "diffusion_steps");
    p.schedule = schedule_family_from_string(detail::get_key<std::string>(cfg, "pretrain", "schedule"));
    p.min_std = detail::get_key<double>(cfg, "pretrain", "min_std");
    p.seed = seed_from(cfg);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return p;
}

struct DataRequest {
    std::size_t n = 256;
    double corrupt = 0.5;
    DatasetOptions options;
};

inline DataRequest data_request_from(const nlohmann::ordered_json& cfg) {
    DataRequest d;
    d.n = detail::get_key<std::size_t>(cfg, "data", "n");
    d.corrupt = detail::get_key<double>(cfg, "data", "corrupt");
    if (d.n == 0) throw ConfigError("config: \"data.n\" must be >= 1");
    if (!(d.corrupt >= 0.0 && d.corrupt <= 1.0)) throw ConfigError("config: \"data.corrupt\" must lie in [0, 1]");
    d.options.frames = detail::get_key<std::size_t>(cfg, "data", "frames");
    d.options.fps = detail::get_key<double>(cfg, "data", "fps");
    d.options.kinds.clear();
    for (const auto& k : detail::get_key<std::vector<std::string>>(cfg, "data", "kinds")) {
        d.options.kinds.push_back(artifact_kind_from_string(k));
    }
    d.options.magnitude_min = detail::get_key<double>(cfg, "data", "magnitude_min");
    d.options.magnitude_max = detail::get_key<double>(cfg, "data", "magnitude_max");
    d.options.min_length = detail::get_key<std::size_t>(cfg, "data", "min_length");
    d.options.max_length = detail::get_key<std::size_t>(cfg, "data", "max_length");
    d.options.inject.metrics = metrics_config_from(cfg);
    d.options.inject.rewards = reward_config_from(cfg);
    return d;
}

}  // namespace reinmotion
