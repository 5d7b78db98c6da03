#pragma once

// Motion data model: skeleton layout, joint-position sequences, contact labels.
// Coordinates are meters with the vertical axis at index 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace reinmotion {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    double horizontal_norm() const { return std::sqrt(x * x + z * z); }
};

inline constexpr std::size_t kVerticalAxis = 1;
inline constexpr double kDefaultContactThreshold = 0.05;

enum class Foot : std::size_t { left = 0, right = 1 };

struct Skeleton {
    std::vector<std::string> joint_names;
    std::size_t left_foot = 0;
    std::size_t right_foot = 0;
    double fps = 20.0;

    std::size_t joint_count() const noexcept { return joint_names.size(); }

    std::size_t foot_index(Foot foot) const noexcept {
        return foot == Foot::left ? left_foot : right_foot;
    }

    void validate() const {
        if (joint_names.empty()) {
            throw std::invalid_argument("skeleton: joint_count must be positive");
        }
        if (left_foot >= joint_count() || right_foot >= joint_count()) {
            throw std::invalid_argument("skeleton: foot index out of range");
        }
        if (left_foot == right_foot) {
            throw std::invalid_argument("skeleton: left and right foot indices must differ");
        }
        if (!(fps > 0.0) || !std::isfinite(fps)) {
            throw std::invalid_argument("skeleton: fps must be positive and finite");
        }
    }

    friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

struct GroundPlane {
    double height = 0.0;

    friend bool operator==(const GroundPlane&, const GroundPlane&) = default;
};

/// A [frames][joints][3] block of joint positions bound to a skeleton and a flat floor.
///
/// Immutable in spirit: the mutating accessors exist for generators and injectors that
/// build a sequence before handing it out. `validate()` enforces the invariants
/// (at least two frames, finite coordinates, joint count matches the skeleton).
class MotionSequence {
public:
    MotionSequence() = default;

    MotionSequence(Skeleton skeleton, GroundPlane ground, std::size_t frames)
        : skeleton_(std::move(skeleton)), ground_(ground), frames_(frames),
          positions_(frames * skeleton_.joint_count() * 3, 0.0) {}

    MotionSequence(Skeleton skeleton, GroundPlane ground, std::size_t frames,
                   std::vector<double> positions)
        : skeleton_(std::move(skeleton)), ground_(ground), frames_(frames),
          positions_(std::move(positions)) {
        if (positions_.size() != frames_ * skeleton_.joint_count() * 3) {
            throw std::invalid_argument("motion: position buffer size does not match frames x joints x 3");
        }
    }

    const Skeleton& skeleton() const noexcept { return skeleton_; }
    const GroundPlane& ground() const noexcept { return ground_; }
    std::size_t frame_count() const noexcept { return frames_; }
    std::size_t joint_count() const noexcept { return skeleton_.joint_count(); }

    std::span<const double> positions() const noexcept { return positions_; }
    std::span<double> positions() noexcept { return positions_; }

    Vec3 joint(std::size_t frame, std::size_t joint) const {
        const std::size_t o = offset(frame, joint);
        return {positions_[o], positions_[o + 1], positions_[o + 2]};
    }

    void set_joint(std::size_t frame, std::size_t joint, const Vec3& p) {
        const std::size_t o = offset(frame, joint);
        positions_[o] = p.x;
        positions_[o + 1] = p.y;
        positions_[o + 2] = p.z;
    }

    Vec3 foot(std::size_t frame, Foot f) const { return joint(frame, skeleton_.foot_index(f)); }

    /// Height of a joint above the ground plane.
    double height_above_ground(std::size_t frame, std::size_t joint) const {
        return positions_[offset(frame, joint) + kVerticalAxis] - ground_.height;
    }

    void validate() const {
        skeleton_.validate();
        if (frames_ < 2) {
            throw std::invalid_argument("motion: at least two frames are required");
        }
        if (positions_.size() != frames_ * joint_count() * 3) {
            throw std::invalid_argument("motion: position buffer size does not match frames x joints x 3");
        }
        if (!std::isfinite(ground_.height)) {
            throw std::invalid_argument("motion: ground height must be finite");
        }
        for (std::size_t i = 0; i < positions_.size(); ++i) {
            if (!std::isfinite(positions_[i])) {
                throw std::invalid_argument("motion: non-finite coordinate at frame " +
                                            std::to_string(i / (joint_count() * 3)));
            }
        }
    }

    friend bool operator==(const MotionSequence&, const MotionSequence&) = default;

private:
    std::size_t offset(std::size_t frame, std::size_t joint) const {
        if (frame >= frames_) {
            throw std::out_of_range("motion: frame index " + std::to_string(frame) + " out of range");
        }
        if (joint >= joint_count()) {
            throw std::out_of_range("motion: joint index " + std::to_string(joint) + " out of range");
        }
        return (frame * joint_count() + joint) * 3;
    }

    Skeleton skeleton_;
    GroundPlane ground_;
    std::size_t frames_ = 0;
    std::vector<double> positions_;
};

/// Per-frame binary contact flags, index 0 = left foot, 1 = right foot.
struct ContactLabels {
    std::vector<std::array<std::uint8_t, 2>> labels;

    std::size_t frame_count() const noexcept { return labels.size(); }
    bool in_contact(std::size_t frame, Foot f) const {
        return labels.at(frame)[static_cast<std::size_t>(f)] != 0;
    }
};

struct MotionBatch {
    std::vector<MotionSequence> sequences;
    std::vector<int> condition_ids;

    std::size_t size() const noexcept { return sequences.size(); }
    bool empty() const noexcept { return sequences.empty(); }

    void validate() const {
        if (condition_ids.size() != sequences.size()) {
            throw std::invalid_argument("batch: condition_ids length does not match sequence count");
        }
        for (std::size_t i = 0; i < sequences.size(); ++i) {
            sequences[i].validate();
            if (sequences[i].skeleton() != sequences.front().skeleton()) {
                throw std::invalid_argument("batch: sequences must share one skeleton");
            }
            if (sequences[i].frame_count() != sequences.front().frame_count()) {
                throw std::invalid_argument("batch: sequences must have equal frame counts");
            }
            if (condition_ids[i] < 0) {
                throw std::invalid_argument("batch: condition ids must be non-negative");
            }
        }
    }
};

/// Which joints participate in the lowest-joint height.
enum class JointScope { all_joints, feet_only };

/// Lowest vertical coordinate at a frame (absolute, not relative to the ground).
inline double lowest_joint_height(const MotionSequence& seq, std::size_t frame,
                                  JointScope scope = JointScope::all_joints) {
    if (frame >= seq.frame_count()) {
        throw std::out_of_range("lowest_joint_height: frame index " + std::to_string(frame) +
                                " out of range");
    }
    if (scope == JointScope::feet_only) {
        return std::min(seq.foot(frame, Foot::left).y, seq.foot(frame, Foot::right).y);
    }
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < seq.joint_count(); ++j) {
        lowest = std::min(lowest, seq.joint(frame, j).y);
    }
    return lowest;
}

/// label[i][foot] = 1 iff the foot is less than `height_threshold` above the ground.
inline ContactLabels derive_contacts(const MotionSequence& seq,
                                     double height_threshold = kDefaultContactThreshold) {
    if (!(height_threshold > 0.0)) {
        throw std::invalid_argument("derive_contacts: height_threshold must be positive");
    }
    ContactLabels out;
    out.labels.resize(seq.frame_count());
    for (std::size_t i = 0; i < seq.frame_count(); ++i) {
        for (Foot f : {Foot::left, Foot::right}) {
            const double h = seq.height_above_ground(i, seq.skeleton().foot_index(f));
            out.labels[i][static_cast<std::size_t>(f)] = h < height_threshold ? 1 : 0;
        }
    }
    return out;
}

/// Rounds every coordinate to the nearest 32-bit float, the width used in motion files.
inline double to_storage_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

inline void quantize_to_storage(MotionSequence& seq) {
    for (double& v : seq.positions()) v = to_storage_precision(v);
}

}  // namespace reinmotion
