#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "reinmotion/motion.hpp"
#include "reinmotion/random.hpp"

namespace testsupport {

using namespace reinmotion;

/// 5-joint skeleton: pelvis, left foot, right foot, two hands.
inline Skeleton five_joint() { return {{"pelvis", "left_foot", "right_foot", "left_hand", "right_hand"}, 1, 2, 20.0}; }

/// Static pose: pelvis at 0.9, feet on the ground 0.3 m apart, hands at 0.6.
inline MotionSequence standing(std::size_t frames = 2, double ground = 0.0) {
    MotionSequence s(five_joint(), GroundPlane{ground}, frames);
    for (std::size_t f = 0; f < frames; ++f) {
        s.set_joint(f, 0, {0.0, ground + 0.9, 0.0});
        s.set_joint(f, 1, {0.0, ground, 0.15});
        s.set_joint(f, 2, {0.0, ground, -0.15});
        s.set_joint(f, 3, {0.0, ground + 0.6, 0.25});
        s.set_joint(f, 4, {0.0, ground + 0.6, -0.25});
    }
    return s;
}

/// Moves every joint of a frame vertically.
inline void lift_frame(MotionSequence& s, std::size_t f, double dy) {
    for (std::size_t j = 0; j < s.joint_count(); ++j) {
        Vec3 p = s.joint(f, j);
        p.y += dy;
        s.set_joint(f, j, p);
    }
}

inline MotionSequence random_motion(std::size_t frames, Rng& rng, double spread = 1.0) {
    MotionSequence s(five_joint(), GroundPlane{0.0}, frames);
    for (double& v : s.positions()) v = rng.uniform(-spread, spread);
    return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("reinmotion_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

}  // namespace testsupport
