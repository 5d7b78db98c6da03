#pragma once

// Physical plausibility metrics: skate ratio, float, penetrate, clip.
// Float/penetrate/clip are accumulated over the frames of a motion and then
// averaged across samples; skate is a per-motion frame fraction.

#include <cmath>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reinmotion/motion.hpp"
#include "reinmotion/rewards.hpp"

namespace reinmotion {

enum class FrameReduction { sum, mean };

struct MetricsConfig {
    double skate_distance_threshold = 0.025;
    double skate_contact_height = 0.05;
    double float_threshold = 0.05;
    double clip_threshold = 0.05;
    bool skate_horizontal_only = true;
    /// severity: sum of (threshold - d); literal: sum of d, over violating frames.
    ClipForm clip_form = ClipForm::severity;
    FrameReduction reduction = FrameReduction::sum;
    JointScope lowest_joint_scope = JointScope::all_joints;

    void validate() const {
        if (!(skate_distance_threshold > 0.0) || !(skate_contact_height > 0.0) || !(float_threshold > 0.0) ||
            !(clip_threshold > 0.0)) {
            throw std::invalid_argument("metrics config: all thresholds must be > 0");
        }
    }
};

struct SampleMetrics {
    double skate_ratio = 0.0;
    double float_m = 0.0;
    double penetrate_m = 0.0;
    double clip_m = 0.0;
};

struct MetricsReport {
    std::vector<SampleMetrics> per_sample;
    SampleMetrics aggregate;
};

namespace detail {

inline double reduce(double sum, std::size_t frames, FrameReduction r) {
    return r == FrameReduction::sum ? sum : sum / static_cast<double>(frames);
}

}  // namespace detail

inline double skate_ratio(const MotionSequence& seq, const MetricsConfig& cfg = {}) {
    if (seq.frame_count() < 2) {
        throw std::invalid_argument("skate_ratio: at least two frames are required");
    }
    std::size_t skating = 0;
    for (std::size_t i = 1; i < seq.frame_count(); ++i) {
        bool skid = false;
        for (Foot f : {Foot::left, Foot::right}) {
            const std::size_t j = seq.skeleton().foot_index(f);
            if (!(seq.height_above_ground(i, j) < cfg.skate_contact_height) ||
                !(seq.height_above_ground(i - 1, j) < cfg.skate_contact_height)) {
                continue;
            }
            const Vec3 d = seq.joint(i, j) - seq.joint(i - 1, j);
            const double dist = cfg.skate_horizontal_only ? d.horizontal_norm() : d.norm();
            skid = skid || dist > cfg.skate_distance_threshold;
        }
        if (skid) ++skating;
    }
    return static_cast<double>(skating) / static_cast<double>(seq.frame_count() - 1);
}

inline double float_total(const MotionSequence& seq, const MetricsConfig& cfg = {}) {
    double sum = 0.0;
    for (std::size_t i = 0; i < seq.frame_count(); ++i) {
        const double above = lowest_joint_height(seq, i, cfg.lowest_joint_scope) - seq.ground().height;
        if (above > cfg.float_threshold) sum += above;
    }
    return detail::reduce(sum, seq.frame_count(), cfg.reduction);
}

inline double penetrate_total(const MotionSequence& seq, const MetricsConfig& cfg = {}) {
    double sum = 0.0;
    for (std::size_t i = 0; i < seq.frame_count(); ++i) {
        const double below = seq.ground().height - lowest_joint_height(seq, i, cfg.lowest_joint_scope);
        if (below > 0.0) sum += below;
    }
    return detail::reduce(sum, seq.frame_count(), cfg.reduction);
}

inline double clip_total(const MotionSequence& seq, const MetricsConfig& cfg = {}) {
    double sum = 0.0;
    for (std::size_t i = 0; i < seq.frame_count(); ++i) {
        const double d = (seq.foot(i, Foot::left) - seq.foot(i, Foot::right)).norm();
        if (d < cfg.clip_threshold) {
            sum += cfg.clip_form == ClipForm::severity ? cfg.clip_threshold - d : d;
        }
    }
    return detail::reduce(sum, seq.frame_count(), cfg.reduction);
}

inline SampleMetrics sample_metrics(const MotionSequence& seq, const MetricsConfig& cfg = {}) {
    return {skate_ratio(seq, cfg), float_total(seq, cfg), penetrate_total(seq, cfg), clip_total(seq, cfg)};
}

inline SampleMetrics mean_metrics(std::span<const SampleMetrics> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("mean_metrics: no samples");
    }
    SampleMetrics m;
    for (const auto& s : samples) {
        m.skate_ratio += s.skate_ratio;
        m.float_m += s.float_m;
        m.penetrate_m += s.penetrate_m;
        m.clip_m += s.clip_m;
    }
    const double n = static_cast<double>(samples.size());
    m.skate_ratio /= n;
    m.float_m /= n;
    m.penetrate_m /= n;
    m.clip_m /= n;
    return m;
}

inline MetricsReport batch_report(std::span<const MotionSequence> sequences, const MetricsConfig& cfg = {}) {
    if (sequences.empty()) {
        throw std::invalid_argument("batch_report: empty batch");
    }
    cfg.validate();
    MetricsReport report;
    report.per_sample.reserve(sequences.size());
    for (const auto& s : sequences) report.per_sample.push_back(sample_metrics(s, cfg));
    report.aggregate = mean_metrics(report.per_sample);
    return report;
}

inline MetricsReport batch_report(const MotionBatch& batch, const MetricsConfig& cfg = {}) {
    return batch_report(std::span<const MotionSequence>(batch.sequences), cfg);
}

/// CSV with one row per sample followed by an `aggregate` row. Column order follows
/// the usual reporting order: skate ratio, float, penetrate, clip.
inline std::string report_csv(const MetricsReport& report, const std::vector<std::string>& sample_ids = {}) {
    std::ostringstream os;
    os.precision(17);
    os << "sample_id,skate_ratio,float_m,penetrate_m,clip_m\n";
    auto row = [&os](const std::string& id, const SampleMetrics& m) {
        os << id << ',' << m.skate_ratio << ',' << m.float_m << ',' << m.penetrate_m << ',' << m.clip_m << '\n';
    };
    for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
        row(i < sample_ids.size() ? sample_ids[i] : std::to_string(i), report.per_sample[i]);
    }
    row("aggregate", report.aggregate);
    return os.str();
}

inline nlohmann::json to_json(const SampleMetrics& m) {
    return {{"skate_ratio", m.skate_ratio}, {"float_m", m.float_m}, {"penetrate_m", m.penetrate_m}, {"clip_m", m.clip_m}};
}

inline SampleMetrics sample_metrics_from_json(const nlohmann::json& j) {
    return {j.at("skate_ratio").get<double>(), j.at("float_m").get<double>(), j.at("penetrate_m").get<double>(),
            j.at("clip_m").get<double>()};
}

inline nlohmann::json to_json(const MetricsReport& report, const std::vector<std::string>& sample_ids = {}) {
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
        auto entry = to_json(report.per_sample[i]);
        entry["sample_id"] = i < sample_ids.size() ? sample_ids[i] : std::to_string(i);
        per.push_back(std::move(entry));
    }
    return {{"per_sample", std::move(per)}, {"aggregate", to_json(report.aggregate)}};
}

}  // namespace reinmotion
