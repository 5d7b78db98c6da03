#pragma once

// Frame-wise physical plausibility rewards: foot sliding, floating, ground
// penetration and foot clipping. Every component lies in (0, 1] and equals 1
// when its gate is off; the frame total is the sum of the four.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "reinmotion/motion.hpp"

namespace reinmotion {

/// Severity: exp(-(threshold - d)) inside the gate. Literal: exp(-d) inside the gate.
enum class ClipForm { severity, literal };

inline const char* to_string(ClipForm form) { return form == ClipForm::severity ? "severity" : "literal"; }

inline ClipForm clip_form_from_string(const std::string& s) {
    if (s == "severity") return ClipForm::severity;
    if (s == "literal") return ClipForm::literal;
    throw std::invalid_argument("unknown clip form \"" + s + "\" (expected severity|literal)");
}

struct RewardConfig {
    double clip_threshold = 0.05;
    double float_tolerance = 0.0;
    double contact_threshold = kDefaultContactThreshold;
    ClipForm clip_form = ClipForm::severity;
    JointScope lowest_joint_scope = JointScope::all_joints;

    void validate() const {
        if (!(clip_threshold > 0.0)) throw std::invalid_argument("reward config: clip_threshold must be > 0");
        if (!(float_tolerance >= 0.0)) throw std::invalid_argument("reward config: float_tolerance must be >= 0");
        if (!(contact_threshold > 0.0)) throw std::invalid_argument("reward config: contact_threshold must be > 0");
    }
};

struct FrameRewards {
    double slide = 1.0;
    double float_r = 1.0;
    double penetrate = 1.0;
    double clip = 1.0;
    double total = 4.0;
};

/// exp(-|| (a_ft^i - a_ft^{i-1}) gated per foot ||). A foot's displacement counts only
/// when that foot is in contact at both frame i and frame i-1.
inline double reward_slide(const MotionSequence& seq, const ContactLabels& contacts, std::size_t i) {
    if (i == 0) {
        throw std::invalid_argument("reward_slide: frame 0 has no predecessor");
    }
    if (i >= seq.frame_count() || contacts.frame_count() != seq.frame_count()) {
        throw std::out_of_range("reward_slide: frame index out of range");
    }
    double squared = 0.0;
    for (Foot f : {Foot::left, Foot::right}) {
        if (!contacts.in_contact(i, f) || !contacts.in_contact(i - 1, f)) continue;
        const Vec3 d = seq.foot(i, f) - seq.foot(i - 1, f);
        squared += d.x * d.x + d.y * d.y + d.z * d.z;
    }
    return std::exp(-std::sqrt(squared));
}

inline double reward_float(const MotionSequence& seq, const RewardConfig& cfg, std::size_t i) {
    const double above = lowest_joint_height(seq, i, cfg.lowest_joint_scope) - seq.ground().height;
    return above > cfg.float_tolerance ? std::exp(-std::abs(above)) : 1.0;
}

inline double reward_penetrate(const MotionSequence& seq, std::size_t i,
                               JointScope scope = JointScope::all_joints) {
    const double below = seq.ground().height - lowest_joint_height(seq, i, scope);
    return below > 0.0 ? std::exp(-below) : 1.0;
}

inline double reward_clip(const MotionSequence& seq, const RewardConfig& cfg, std::size_t i) {
    const double d = (seq.foot(i, Foot::left) - seq.foot(i, Foot::right)).norm();
    if (!(d < cfg.clip_threshold)) return 1.0;
    return cfg.clip_form == ClipForm::severity ? std::exp(-(cfg.clip_threshold - d)) : std::exp(-d);
}

inline FrameRewards frame_reward(const MotionSequence& seq, const ContactLabels& contacts,
                                 const RewardConfig& cfg, std::size_t i) {
    FrameRewards r;
    r.slide = reward_slide(seq, contacts, i);
    r.float_r = reward_float(seq, cfg, i);
    r.penetrate = reward_penetrate(seq, i, cfg.lowest_joint_scope);
    r.clip = reward_clip(seq, cfg, i);
    r.total = r.slide + r.float_r + r.penetrate + r.clip;
    return r;
}

/// Rewards for frames 1..F-1 (frame 0 has no predecessor for the slide term).
inline std::vector<FrameRewards> sequence_rewards(const MotionSequence& seq, const RewardConfig& cfg) {
    if (seq.frame_count() < 2) {
        throw std::invalid_argument("sequence_rewards: at least two frames are required");
    }
    const ContactLabels contacts = derive_contacts(seq, cfg.contact_threshold);
    std::vector<FrameRewards> out;
    out.reserve(seq.frame_count() - 1);
    for (std::size_t i = 1; i < seq.frame_count(); ++i) {
        out.push_back(frame_reward(seq, contacts, cfg, i));
    }
    return out;
}

inline std::vector<double> total_rewards(const std::vector<FrameRewards>& frames) {
    std::vector<double> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f.total);
    return out;
}

/// CSV dump; row k describes frame k + 1.
inline std::string rewards_csv(const std::vector<FrameRewards>& frames) {
    std::ostringstream os;
    os.precision(17);
    os << "frame,slide,float,penetrate,clip,total\n";
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto& r = frames[k];
        os << k + 1 << ',' << r.slide << ',' << r.float_r << ',' << r.penetrate << ',' << r.clip << ','
           << r.total << '\n';
    }
    return os.str();
}

}  // namespace reinmotion
