#pragma once

// Procedural clean gaits and class-pure artifact injection.
//
// Clean gaits: 5 joints (pelvis, feet, hand proxies). Every frame has at least one
// foot exactly on the ground and stationary; a swinging foot stays at least
// kSwingClearance above the ground and moves less than kMaxSwingSpeed per frame
// horizontally. Feet are laterally separated by at least 0.18 m.
//
// Each injection corrupts exactly one metric family and returns the expected
// metric values computed from the construction itself.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reinmotion/metrics.hpp"
#include "reinmotion/motion.hpp"
#include "reinmotion/random.hpp"
#include "reinmotion/rewards.hpp"

namespace reinmotion {

inline constexpr double kSwingClearance = 0.1;
inline constexpr double kMaxSwingSpeed = 0.02;

enum class GaitClass { walk = 0, crouch_walk = 1, march = 2 };

inline const std::vector<std::string>& gait_class_names() {
    static const std::vector<std::string> names{"walk", "crouch-walk", "march"};
    return names;
}

inline Skeleton gait_skeleton(double fps = 20.0) {
    return Skeleton{{"pelvis", "left_foot", "right_foot", "left_hand", "right_hand"}, 1, 2, fps};
}

struct GaitParams {
    GaitClass gait_class = GaitClass::walk;
    std::size_t frames = 60;
    double fps = 20.0;
    double stride_length = 0.12;  // forward advance of a foot per swing
    double cadence = 1.6;         // steps per second
    double lift_height = 0.14;    // swing apex above ground
    double pelvis_height = 0.92;

    void validate() const {
        if (frames < 2) throw std::invalid_argument("gait params: at least two frames are required");
        if (!(fps > 0.0) || !(stride_length > 0.0) || !(cadence > 0.0) || !(lift_height > 0.0) ||
            !(pelvis_height > 0.0)) {
            throw std::invalid_argument("gait params: kinematic parameters must be positive");
        }
        if (lift_height < kSwingClearance) {
            throw std::invalid_argument("gait params: lift_height must be at least the swing clearance");
        }
    }
};

/// Class-typical parameters with per-sample variation.
inline GaitParams random_gait_params(GaitClass cls, Rng& rng, std::size_t frames = 60, double fps = 20.0) {
    GaitParams p;
    p.gait_class = cls;
    p.frames = frames;
    p.fps = fps;
    switch (cls) {
        case GaitClass::walk:
            p.stride_length = rng.uniform(0.10, 0.15);
            p.cadence = rng.uniform(1.4, 1.8);
            p.lift_height = rng.uniform(0.12, 0.16);
            p.pelvis_height = rng.uniform(0.88, 0.96);
            break;
        case GaitClass::crouch_walk:
            p.stride_length = rng.uniform(0.08, 0.12);
            p.cadence = rng.uniform(1.2, 1.5);
            p.lift_height = rng.uniform(0.11, 0.13);
            p.pelvis_height = rng.uniform(0.60, 0.70);
            break;
        case GaitClass::march:
            p.stride_length = rng.uniform(0.09, 0.13);
            p.cadence = rng.uniform(1.6, 2.0);
            p.lift_height = rng.uniform(0.20, 0.26);
            p.pelvis_height = rng.uniform(0.90, 0.98);
            break;
    }
    return p;
}

namespace detail {

inline double ease(double u) { return 0.5 * (1.0 - std::cos(std::numbers::pi * u)); }

}  // namespace detail

/// Analytic gait: alternating single-support steps of D frames with one double-support
/// frame at each step boundary. Output is rounded to file storage precision.
inline MotionSequence generate_clean(const GaitParams& params, std::uint64_t seed) {
    params.validate();
    Rng rng(seed);
    const auto step_frames = static_cast<std::size_t>(std::max(4.0, std::round(params.fps / params.cadence)));
    const double d = static_cast<double>(step_frames);
    // Peak horizontal swing speed of the eased profile is pi * stride / (2 D).
    const double stride = std::min(params.stride_length, kMaxSwingSpeed * 2.0 * d / std::numbers::pi);
    const std::size_t lead = static_cast<std::size_t>(rng.uniform_int(0, 1));
    const std::size_t phase = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(step_frames) - 1));
    const double half_width = rng.uniform(0.09, 0.13);
    const double x_start = rng.uniform(-0.1, 0.1);
    const double bob = 0.015;

    MotionSequence seq(gait_skeleton(params.fps), GroundPlane{0.0}, params.frames);
    for (std::size_t f = 0; f < params.frames; ++f) {
        const std::size_t g = f + phase;
        const std::size_t step = g / step_frames;
        const std::size_t k = g % step_frames;
        const double u = static_cast<double>(k) / d;
        std::array<Vec3, 2> feet;
        for (std::size_t j = 0; j < 2; ++j) {
            const std::size_t parity = (lead + j) % 2;  // foot j swings on steps with this parity
            const std::size_t swings_done = (step + 1 - parity) / 2;
            const double x0 = x_start + (parity == 0 ? 0.0 : 0.5 * stride);
            const bool swinging = step % 2 == parity && k > 0;
            Vec3 p;
            p.x = x0 + stride * static_cast<double>(swings_done);
            p.z = j == 0 ? half_width : -half_width;
            if (swinging) {
                p.x += stride * detail::ease(u);
                p.y = kSwingClearance + (params.lift_height - kSwingClearance) * std::sin(std::numbers::pi * u);
            }
            feet[j] = p;
        }
        const double cycle = (static_cast<double>(g) / d) * std::numbers::pi;
        Vec3 pelvis{0.5 * (feet[0].x + feet[1].x) + 0.02, params.pelvis_height + bob * std::cos(2.0 * cycle), 0.0};
        const double arm = 0.06 * std::sin(cycle);
        const double hand_drop = 0.35 * params.pelvis_height / 0.92;
        Vec3 left_hand{pelvis.x + arm, pelvis.y - hand_drop, 0.22};
        Vec3 right_hand{pelvis.x - arm, pelvis.y - hand_drop, -0.22};
        seq.set_joint(f, 0, pelvis);
        seq.set_joint(f, 1, feet[0]);
        seq.set_joint(f, 2, feet[1]);
        seq.set_joint(f, 3, left_hand);
        seq.set_joint(f, 4, right_hand);
    }
    quantize_to_storage(seq);
    return seq;
}

enum class ArtifactKind { skate, float_up, penetrate, clip };

inline const char* to_string(ArtifactKind k) {
    switch (k) {
        case ArtifactKind::skate: return "skate";
        case ArtifactKind::float_up: return "float";
        case ArtifactKind::penetrate: return "penetrate";
        case ArtifactKind::clip: return "clip";
    }
    return "?";
}

inline ArtifactKind artifact_kind_from_string(const std::string& s) {
    if (s == "skate") return ArtifactKind::skate;
    if (s == "float") return ArtifactKind::float_up;
    if (s == "penetrate") return ArtifactKind::penetrate;
    if (s == "clip") return ArtifactKind::clip;
    throw std::invalid_argument("unknown artifact kind \"" + s + "\"");
}

struct ArtifactSpec {
    ArtifactKind kind = ArtifactKind::penetrate;
    std::size_t first_frame = 0;
    std::size_t last_frame = 0;  // inclusive
    double magnitude = 0.0;

    std::size_t length() const { return last_frame - first_frame + 1; }
};

/// Expected metrics of the corrupted sequence (the non-target families keep the clean
/// value 0) and the expected drop of the targeted reward component per reward frame.
struct ArtifactRecord {
    std::optional<ArtifactSpec> spec;  // empty for clean sequences
    SampleMetrics expected;
    std::vector<double> target_reward_drop;  // index i - 1 for frame i
};

struct InjectOptions {
    MetricsConfig metrics;
    RewardConfig rewards;
    /// Round applied offsets and positions to file storage precision so that the
    /// record also holds for the sequence after a write/read cycle.
    bool storage_precision = false;
};

class InjectionRejected : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline bool on_ground(const MotionSequence& s, std::size_t f, Foot foot) {
    return s.height_above_ground(f, s.skeleton().foot_index(foot)) == 0.0;
}

/// A foot that is on the ground and stationary over [first, last].
inline std::optional<Foot> stationary_stance_foot(const MotionSequence& s, std::size_t first, std::size_t last) {
    for (Foot foot : {Foot::left, Foot::right}) {
        bool ok = true;
        for (std::size_t f = first; f <= last && ok; ++f) {
            ok = on_ground(s, f, foot) && s.foot(f, foot) == s.foot(first, foot);
        }
        if (ok) return foot;
    }
    return std::nullopt;
}

inline Foot other(Foot f) { return f == Foot::left ? Foot::right : Foot::left; }

}  // namespace detail

inline std::pair<MotionSequence, ArtifactRecord> inject_artifact(const MotionSequence& clean, const ArtifactSpec& spec,
                                                                 const InjectOptions& opt = {}) {
    const std::size_t frames = clean.frame_count();
    if (spec.first_frame > spec.last_frame || spec.last_frame >= frames) {
        throw std::invalid_argument("inject_artifact: frame range outside the sequence");
    }
    if (!(spec.magnitude > 0.0) || !std::isfinite(spec.magnitude)) {
        throw std::invalid_argument("inject_artifact: magnitude must be > 0");
    }
    const double m = opt.storage_precision ? to_storage_precision(spec.magnitude) : spec.magnitude;
    const double g = clean.ground().height;
    const auto& mc = opt.metrics;
    const auto& rc = opt.rewards;

    MotionSequence out = clean;
    ArtifactRecord rec;
    rec.spec = spec;
    rec.target_reward_drop.assign(frames - 1, 0.0);
    auto drop_at = [&](std::size_t frame, double value) {
        if (frame >= 1) rec.target_reward_drop[frame - 1] = value;
    };

    switch (spec.kind) {
        case ArtifactKind::float_up:
        case ArtifactKind::penetrate: {
            const double offset = spec.kind == ArtifactKind::float_up ? m : -m;
            for (std::size_t f = spec.first_frame; f <= spec.last_frame; ++f) {
                if (lowest_joint_height(clean, f, mc.lowest_joint_scope) != g) {
                    throw InjectionRejected("inject_artifact: frame " + std::to_string(f) +
                                            " does not rest on the ground (expects a clean gait)");
                }
                for (std::size_t j = 0; j < clean.joint_count(); ++j) {
                    Vec3 p = clean.joint(f, j);
                    p.y += offset;
                    out.set_joint(f, j, p);
                }
            }
            if (spec.kind == ArtifactKind::penetrate) {
                // A lowered swing foot may drop under the contact height; it must not skid there.
                for (std::size_t f = std::max<std::size_t>(spec.first_frame, 1); f <= std::min(spec.last_frame + 1, frames - 1); ++f) {
                    for (Foot foot : {Foot::left, Foot::right}) {
                        const std::size_t j = clean.skeleton().foot_index(foot);
                        if (out.height_above_ground(f, j) < mc.skate_contact_height &&
                            out.height_above_ground(f - 1, j) < mc.skate_contact_height) {
                            const Vec3 d = out.joint(f, j) - out.joint(f - 1, j);
                            const double dist = mc.skate_horizontal_only ? d.horizontal_norm() : d.norm();
                            if (dist > mc.skate_distance_threshold) {
                                throw InjectionRejected("inject_artifact: penetration of " + std::to_string(m) +
                                                        " m would make a moving swing foot count as skating at frame " +
                                                        std::to_string(f));
                            }
                        }
                    }
                }
            }
            for (std::size_t f = spec.first_frame; f <= spec.last_frame; ++f) {
                if (spec.kind == ArtifactKind::float_up) {
                    if (m > mc.float_threshold) rec.expected.float_m += m;
                    if (m > rc.float_tolerance) drop_at(f, 1.0 - std::exp(-m));
                } else {
                    rec.expected.penetrate_m += m;
                    drop_at(f, 1.0 - std::exp(-m));
                }
            }
            break;
        }
        case ArtifactKind::skate: {
            if (spec.first_frame == 0) {
                throw InjectionRejected("inject_artifact: skating needs the frame before the range");
            }
            const auto stance = detail::stationary_stance_foot(clean, spec.first_frame - 1, spec.last_frame);
            if (!stance) {
                throw InjectionRejected("inject_artifact: skate range must lie within one stance phase");
            }
            const std::size_t j = clean.skeleton().foot_index(*stance);
            // The drift persists until the foot lifts off.
            std::size_t end = spec.last_frame;
            while (end + 1 < frames && clean.foot(end + 1, *stance) == clean.foot(spec.last_frame, *stance)) ++end;
            const Vec3 base = clean.joint(spec.first_frame - 1, j);
            for (std::size_t f = spec.first_frame; f <= end; ++f) {
                const std::size_t steps = std::min(f, spec.last_frame) - spec.first_frame + 1;
                Vec3 p = base;
                p.x += m * static_cast<double>(steps);
                if (opt.storage_precision) p.x = to_storage_precision(p.x);
                const double sep = (p - clean.foot(f, detail::other(*stance))).norm();
                if (!(sep >= mc.clip_threshold) || !(sep >= rc.clip_threshold)) {
                    throw InjectionRejected("inject_artifact: skating foot would clip the other foot at frame " +
                                            std::to_string(f));
                }
                out.set_joint(f, j, p);
            }
            std::size_t skids = 0;
            for (std::size_t f = spec.first_frame; f <= spec.last_frame; ++f) {
                const double moved = out.joint(f, j).x - out.joint(f - 1, j).x;
                if (moved > mc.skate_distance_threshold) ++skids;
                drop_at(f, 1.0 - std::exp(-moved));
            }
            rec.expected.skate_ratio = static_cast<double>(skids) / static_cast<double>(frames - 1);
            break;
        }
        case ArtifactKind::clip: {
            const auto stance = detail::stationary_stance_foot(clean, spec.first_frame, spec.last_frame);
            if (!stance) {
                throw InjectionRejected("inject_artifact: clip range must lie within one stance phase of the other foot");
            }
            const Foot hover = detail::other(*stance);
            const std::size_t j = clean.skeleton().foot_index(hover);
            auto airborne = [&](std::size_t f) {
                return clean.height_above_ground(f, j) >= std::max(mc.skate_contact_height, rc.contact_threshold);
            };
            for (std::size_t f = spec.first_frame; f <= spec.last_frame; ++f) {
                if (!airborne(f)) throw InjectionRejected("inject_artifact: clipping foot must be airborne over the range");
            }
            if ((spec.first_frame > 0 && !airborne(spec.first_frame - 1)) ||
                (spec.last_frame + 1 < frames && !airborne(spec.last_frame + 1))) {
                throw InjectionRejected("inject_artifact: clip range must be bordered by airborne frames");
            }
            double gap = std::max(mc.clip_threshold - m, 0.0);
            if (opt.storage_precision) gap = to_storage_precision(gap);
            for (std::size_t f = spec.first_frame; f <= spec.last_frame; ++f) {
                Vec3 p = clean.foot(f, *stance);
                p.y += gap;
                out.set_joint(f, j, p);
                rec.expected.clip_m += mc.clip_form == ClipForm::severity ? mc.clip_threshold - gap : gap;
                if (gap < rc.clip_threshold) {
                    drop_at(f, 1.0 - (rc.clip_form == ClipForm::severity ? std::exp(-(rc.clip_threshold - gap))
                                                                          : std::exp(-gap)));
                }
            }
            break;
        }
    }
    if (opt.storage_precision) quantize_to_storage(out);
    if (mc.reduction == FrameReduction::mean) {
        const double n = static_cast<double>(frames);
        rec.expected.float_m /= n;
        rec.expected.penetrate_m /= n;
        rec.expected.clip_m /= n;
    }
    return {std::move(out), std::move(rec)};
}

struct DatasetOptions {
    std::size_t frames = 60;
    double fps = 20.0;
    std::vector<ArtifactKind> kinds{ArtifactKind::skate, ArtifactKind::float_up, ArtifactKind::penetrate,
                                    ArtifactKind::clip};
    double magnitude_min = 0.02;
    double magnitude_max = 0.06;
    std::size_t min_length = 4;
    std::size_t max_length = 10;
    bool storage_precision = true;
    InjectOptions inject;
};

struct Dataset {
    MotionBatch batch;
    std::vector<ArtifactRecord> records;
    std::vector<std::string> class_names = gait_class_names();
};

/// n sequences cycling through the gait classes; floor(n * corrupt_fraction) of them,
/// chosen at random, carry one random artifact each.
inline Dataset build_dataset(std::size_t n, double corrupt_fraction, std::uint64_t seed, const DatasetOptions& opt = {}) {
    if (n == 0) throw std::invalid_argument("build_dataset: n must be >= 1");
    if (!(corrupt_fraction >= 0.0 && corrupt_fraction <= 1.0)) {
        throw std::invalid_argument("build_dataset: corrupt_fraction must lie in [0, 1]");
    }
    if (opt.kinds.empty() || opt.min_length == 0 || opt.min_length > opt.max_length || !(opt.magnitude_min > 0.0) ||
        opt.magnitude_min > opt.magnitude_max) {
        throw std::invalid_argument("build_dataset: invalid artifact options");
    }
    Rng rng(seed);
    Dataset ds;
    const std::size_t classes = gait_class_names().size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto cls = static_cast<GaitClass>(i % classes);
        const GaitParams params = random_gait_params(cls, rng, opt.frames, opt.fps);
        ds.batch.sequences.push_back(generate_clean(params, rng.next_seed()));
        ds.batch.condition_ids.push_back(static_cast<int>(cls));
        ds.records.push_back(ArtifactRecord{std::nullopt, {}, std::vector<double>(opt.frames - 1, 0.0)});
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng.engine());
    const auto corrupt = static_cast<std::size_t>(std::floor(static_cast<double>(n) * corrupt_fraction + 1e-12));

    InjectOptions inject = opt.inject;
    inject.storage_precision = opt.storage_precision;
    for (std::size_t c = 0; c < corrupt; ++c) {
        const std::size_t idx = order[c];
        const auto kind = opt.kinds[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(opt.kinds.size()) - 1))];
        const double magnitude = opt.magnitude_min == opt.magnitude_max ? opt.magnitude_min
                                                                         : rng.uniform(opt.magnitude_min, opt.magnitude_max);
        bool done = false;
        for (int attempt = 0; attempt < 500 && !done; ++attempt) {
            const auto len = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(opt.min_length),
                                                                       static_cast<std::int64_t>(opt.max_length)));
            if (len > opt.frames - 1) break;
            const auto first = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(opt.frames - len)));
            try {
                auto [seq, rec] = inject_artifact(ds.batch.sequences[idx], {kind, first, first + len - 1, magnitude}, inject);
                ds.batch.sequences[idx] = std::move(seq);
                ds.records[idx] = std::move(rec);
                done = true;
            } catch (const InjectionRejected&) {
            }
        }
        if (!done) {
            throw std::runtime_error(std::string("build_dataset: could not place a ") + to_string(kind) +
                                     " artifact in sequence " + std::to_string(idx));
        }
    }
    return ds;
}

}  // namespace reinmotion
