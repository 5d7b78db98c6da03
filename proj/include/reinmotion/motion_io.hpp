#pragma once

// Motion file format: a JSON document with 32-bit float payload.
//
//   { "version": 1, "fps": 20, "axis_up": "y", "ground_height": 0,
//     "joint_names": [...], "left_foot": 1, "right_foot": 2,
//     "frames": [ [ [x, y, z], ... joints ], ... frames ] }

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "reinmotion/motion.hpp"

namespace reinmotion {

/// JSON value whose floating-point numbers are 32-bit, so dumps use the shortest
/// representation that round-trips a float.
using StorageJson = nlohmann::basic_json<std::map, std::vector, std::string, bool, std::int64_t,
                                         std::uint64_t, float>;

inline constexpr int kMotionFormatVersion = 1;

class MotionParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const StorageJson& require_field(const StorageJson& doc, const char* name) {
    auto it = doc.find(name);
    if (it == doc.end()) {
        throw MotionParseError(std::string("motion file: missing field \"") + name + "\"");
    }
    return *it;
}

inline double require_finite_number(const StorageJson& v, const std::string& what) {
    if (!v.is_number()) {
        throw MotionParseError("motion file: " + what + " is not a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw MotionParseError("motion file: " + what + " is not finite");
    }
    return d;
}

}  // namespace detail

inline StorageJson motion_to_json(const MotionSequence& seq) {
    seq.validate();
    StorageJson doc;
    doc["version"] = kMotionFormatVersion;
    doc["fps"] = static_cast<float>(seq.skeleton().fps);
    doc["axis_up"] = "y";
    doc["ground_height"] = static_cast<float>(seq.ground().height);
    doc["joint_names"] = seq.skeleton().joint_names;
    doc["left_foot"] = seq.skeleton().left_foot;
    doc["right_foot"] = seq.skeleton().right_foot;
    StorageJson frames = StorageJson::array();
    for (std::size_t f = 0; f < seq.frame_count(); ++f) {
        StorageJson joints = StorageJson::array();
        for (std::size_t j = 0; j < seq.joint_count(); ++j) {
            const Vec3 p = seq.joint(f, j);
            joints.push_back({static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)});
        }
        frames.push_back(std::move(joints));
    }
    doc["frames"] = std::move(frames);
    return doc;
}

inline MotionSequence motion_from_json(const StorageJson& doc) {
    using detail::require_field;
    using detail::require_finite_number;
    if (!doc.is_object()) {
        throw MotionParseError("motion file: top level must be an object");
    }
    const auto& version = require_field(doc, "version");
    if (!version.is_number_integer() || version.get<int>() != kMotionFormatVersion) {
        throw MotionParseError("motion file: unsupported \"version\"");
    }
    const auto& axis = require_field(doc, "axis_up");
    if (!axis.is_string() || axis.get<std::string>() != "y") {
        throw MotionParseError("motion file: \"axis_up\" must be \"y\"");
    }

    Skeleton skeleton;
    skeleton.fps = require_finite_number(require_field(doc, "fps"), "\"fps\"");
    const auto& names = require_field(doc, "joint_names");
    if (!names.is_array()) {
        throw MotionParseError("motion file: \"joint_names\" must be an array of strings");
    }
    for (const auto& n : names) {
        if (!n.is_string()) {
            throw MotionParseError("motion file: \"joint_names\" must be an array of strings");
        }
        skeleton.joint_names.push_back(n.get<std::string>());
    }
    for (const char* key : {"left_foot", "right_foot"}) {
        const auto& v = require_field(doc, key);
        if (!v.is_number_unsigned()) {
            throw MotionParseError(std::string("motion file: \"") + key + "\" must be a joint index");
        }
    }
    skeleton.left_foot = doc["left_foot"].get<std::size_t>();
    skeleton.right_foot = doc["right_foot"].get<std::size_t>();
    try {
        skeleton.validate();
    } catch (const std::invalid_argument& e) {
        throw MotionParseError(std::string("motion file: invalid skeleton (") + e.what() + ")");
    }

    GroundPlane ground{require_finite_number(require_field(doc, "ground_height"), "\"ground_height\"")};

    const auto& frames = require_field(doc, "frames");
    if (!frames.is_array() || frames.size() < 2) {
        throw MotionParseError("motion file: \"frames\" must be an array of at least two frames");
    }
    const std::size_t joint_count = skeleton.joint_count();
    std::vector<double> positions;
    positions.reserve(frames.size() * joint_count * 3);
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto& frame = frames[f];
        if (!frame.is_array() || frame.size() != joint_count) {
            throw MotionParseError("motion file: frame " + std::to_string(f) + " has " +
                                   std::to_string(frame.is_array() ? frame.size() : 0) +
                                   " joints, expected " + std::to_string(joint_count) +
                                   " (from \"joint_names\")");
        }
        for (std::size_t j = 0; j < joint_count; ++j) {
            const auto& p = frame[j];
            if (!p.is_array() || p.size() != 3) {
                throw MotionParseError("motion file: frame " + std::to_string(f) + " joint " +
                                       std::to_string(j) + " must have 3 coordinates");
            }
            for (std::size_t k = 0; k < 3; ++k) {
                positions.push_back(require_finite_number(
                    p[k], "frame " + std::to_string(f) + " joint " + std::to_string(j) + " coordinate"));
            }
        }
    }
    return MotionSequence(std::move(skeleton), ground, frames.size(), std::move(positions));
}

inline std::string motion_to_string(const MotionSequence& seq) { return motion_to_json(seq).dump() + "\n"; }

inline MotionSequence motion_from_string(const std::string& text) {
    StorageJson doc;
    try {
        doc = StorageJson::parse(text);
    } catch (const StorageJson::parse_error& e) {
        throw MotionParseError(std::string("motion file: malformed document: ") + e.what());
    }
    return motion_from_json(doc);
}

inline void write_motion(const MotionSequence& seq, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << motion_to_string(seq);
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

inline MotionSequence read_motion(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return motion_from_string(buffer.str());
    } catch (const MotionParseError& e) {
        throw MotionParseError(path.string() + ": " + e.what());
    }
}

}  // namespace reinmotion
