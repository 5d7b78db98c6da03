#include <catch_amalgamated.hpp>

#include <cmath>

#include "reinmotion/metrics.hpp"
#include "reinmotion/rewards.hpp"
#include "reinmotion/synthdata.hpp"

using namespace reinmotion;

namespace {

GaitParams slow_crouch() {
    GaitParams p;
    p.gait_class = GaitClass::crouch_walk;
    p.cadence = 1.2;
    p.stride_length = 0.10;
    p.lift_height = 0.12;
    p.pelvis_height = 0.65;
    return p;
}

/// Tries every start frame on a few seeds until the injector accepts the artifact.
std::optional<std::pair<MotionSequence, ArtifactRecord>> place(const GaitParams& p, ArtifactKind kind, std::size_t length,
                                                               double magnitude, const InjectOptions& opt = {}) {
    for (std::uint64_t seed = 1; seed < 40; ++seed) {
        const MotionSequence clean = generate_clean(p, seed);
        for (std::size_t first = 1; first + length <= p.frames; ++first) {
            try {
                return inject_artifact(clean, {kind, first, first + length - 1, magnitude}, opt);
            } catch (const InjectionRejected&) {
            }
        }
    }
    return std::nullopt;
}

double component(const FrameRewards& fr, ArtifactKind kind) {
    switch (kind) {
        case ArtifactKind::skate: return fr.slide;
        case ArtifactKind::float_up: return fr.float_r;
        case ArtifactKind::penetrate: return fr.penetrate;
        case ArtifactKind::clip: return fr.clip;
    }
    return 0.0;
}

}  // namespace

TEST_CASE("clean gaits satisfy the generator's guarantees") {
    Rng rng(17);
    for (int k = 0; k < 30; ++k) {
        const auto p = random_gait_params(static_cast<GaitClass>(k % 3), rng);
        const auto seed = rng.next_seed();
        const MotionSequence s = generate_clean(p, seed);
        CHECK(s == generate_clean(p, seed));
        CHECK(s.joint_count() == 5);
        CHECK(s.frame_count() == 60);
        const auto m = sample_metrics(s);
        CHECK(m.skate_ratio == 0.0);
        CHECK(m.float_m == 0.0);
        CHECK(m.penetrate_m == 0.0);
        CHECK(m.clip_m == 0.0);
        for (const auto& fr : sequence_rewards(s, RewardConfig{})) CHECK(std::abs(fr.total - 4.0) < 1e-9);
        for (std::size_t f = 0; f < s.frame_count(); ++f) {
            CHECK((s.foot(f, Foot::left) - s.foot(f, Foot::right)).norm() >= 0.1);
            const bool left_down = s.foot(f, Foot::left).y == 0.0;
            const bool right_down = s.foot(f, Foot::right).y == 0.0;
            CHECK((left_down || right_down));
            if (f > 0) {
                for (Foot foot : {Foot::left, Foot::right}) {
                    if (s.foot(f, foot).y == 0.0 && s.foot(f - 1, foot).y == 0.0) CHECK(s.foot(f, foot) == s.foot(f - 1, foot));
                }
            }
        }
    }
}

TEST_CASE("short sequences and parameter validation") {
    GaitParams p;
    p.frames = 2;
    CHECK(generate_clean(p, 1).frame_count() == 2);
    p.frames = 1;
    CHECK_THROWS_AS(generate_clean(p, 1), std::invalid_argument);
    p = GaitParams{};
    p.cadence = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = GaitParams{};
    p.lift_height = 0.05;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("injection examples record exact metric totals") {
    const GaitParams p = slow_crouch();

    const auto pen = place(p, ArtifactKind::penetrate, 10, 0.03);
    REQUIRE(pen);
    CHECK(std::abs(pen->second.expected.penetrate_m - 0.30) < 1e-12);
    CHECK(std::abs(penetrate_total(pen->first) - 0.30) < 1e-9);
    CHECK(skate_ratio(pen->first) == 0.0);
    CHECK(float_total(pen->first) == 0.0);
    CHECK(clip_total(pen->first) == 0.0);

    const auto flt = place(p, ArtifactKind::float_up, 5, 0.08);
    REQUIRE(flt);
    CHECK(std::abs(flt->second.expected.float_m - 0.40) < 1e-12);
    CHECK(std::abs(float_total(flt->first) - 0.40) < 1e-9);

    const auto sk = place(p, ArtifactKind::skate, 12, 0.04);
    REQUIRE(sk);
    CHECK(std::abs(sk->second.expected.skate_ratio - 12.0 / 59.0) < 1e-12);
    CHECK(std::abs(skate_ratio(sk->first) - 12.0 / 59.0) < 1e-12);
    CHECK(penetrate_total(sk->first) == 0.0);
    CHECK(float_total(sk->first) == 0.0);
    CHECK(clip_total(sk->first) == 0.0);
}

TEST_CASE("injector records agree with metrics and rewards for every kind and magnitude") {
    const double magnitudes[] = {0.01, 0.03, 0.08, 0.2};
    Rng rng(31);
    for (ArtifactKind kind : {ArtifactKind::skate, ArtifactKind::float_up, ArtifactKind::penetrate, ArtifactKind::clip}) {
        for (double m : magnitudes) {
            int accepted = 0;
            for (int trial = 0; trial < 12; ++trial) {
                const auto p = random_gait_params(static_cast<GaitClass>(trial % 3), rng);
                const MotionSequence clean = generate_clean(p, rng.next_seed());
                const auto len = static_cast<std::size_t>(rng.uniform_int(2, 6));
                const auto first = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(60 - len)));
                std::pair<MotionSequence, ArtifactRecord> result;
                try {
                    result = inject_artifact(clean, {kind, first, first + len - 1, m});
                } catch (const InjectionRejected&) {
                    continue;
                }
                ++accepted;
                const auto& [dirty, rec] = result;
                const auto got = sample_metrics(dirty);
                CHECK(std::abs(got.skate_ratio - rec.expected.skate_ratio) < 1e-9);
                CHECK(std::abs(got.float_m - rec.expected.float_m) < 1e-9);
                CHECK(std::abs(got.penetrate_m - rec.expected.penetrate_m) < 1e-9);
                CHECK(std::abs(got.clip_m - rec.expected.clip_m) < 1e-9);

                // Exactly one metric family may move.
                const int moved = (got.skate_ratio != 0.0) + (got.float_m != 0.0) + (got.penetrate_m != 0.0) + (got.clip_m != 0.0);
                CHECK(moved <= 1);
                if (kind != ArtifactKind::skate) CHECK(got.skate_ratio == 0.0);
                if (kind != ArtifactKind::float_up) CHECK(got.float_m == 0.0);
                if (kind != ArtifactKind::penetrate) CHECK(got.penetrate_m == 0.0);
                if (kind != ArtifactKind::clip) CHECK(got.clip_m == 0.0);

                const auto frames = sequence_rewards(dirty, RewardConfig{});
                for (std::size_t i = 1; i < dirty.frame_count(); ++i) {
                    CHECK(std::abs((1.0 - component(frames[i - 1], kind)) - rec.target_reward_drop[i - 1]) < 1e-9);
                }
            }
            INFO(to_string(kind) << " magnitude " << m);
            if (m <= 0.08) CHECK(accepted > 0);
        }
    }
}

TEST_CASE("injector rejects invalid placements") {
    const MotionSequence clean = generate_clean(slow_crouch(), 3);
    CHECK_THROWS_AS(inject_artifact(clean, {ArtifactKind::float_up, 5, 60, 0.03}), std::invalid_argument);
    CHECK_THROWS_AS(inject_artifact(clean, {ArtifactKind::float_up, 5, 6, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(inject_artifact(clean, {ArtifactKind::skate, 0, 3, 0.03}), InjectionRejected);
    // A skate range longer than any stance phase cannot be placed.
    CHECK_THROWS_AS(inject_artifact(clean, {ArtifactKind::skate, 1, 40, 0.03}), InjectionRejected);
    MotionSequence lifted = clean;
    for (std::size_t j = 0; j < 5; ++j) {
        Vec3 q = lifted.joint(7, j);
        q.y += 0.2;
        lifted.set_joint(7, j, q);
    }
    CHECK_THROWS_AS(inject_artifact(lifted, {ArtifactKind::penetrate, 6, 8, 0.03}), InjectionRejected);
}

TEST_CASE("artifact kind names") {
    CHECK(std::string(to_string(ArtifactKind::float_up)) == "float");
    CHECK(artifact_kind_from_string("clip") == ArtifactKind::clip);
    CHECK_THROWS(artifact_kind_from_string("jitter"));
}

TEST_CASE("dataset construction") {
    const Dataset clean = build_dataset(12, 0.0, 5);
    REQUIRE(clean.batch.sequences.size() == 12);
    CHECK_NOTHROW(clean.batch.validate());
    const auto rep = batch_report(clean.batch);
    CHECK(rep.aggregate.skate_ratio == 0.0);
    CHECK(rep.aggregate.float_m == 0.0);
    CHECK(rep.aggregate.penetrate_m == 0.0);
    CHECK(rep.aggregate.clip_m == 0.0);
    for (std::size_t i = 0; i < 12; ++i) CHECK(clean.batch.condition_ids[i] == static_cast<int>(i % 3));

    DatasetOptions pen;
    pen.kinds = {ArtifactKind::penetrate};
    pen.magnitude_min = pen.magnitude_max = 0.03;
    pen.min_length = pen.max_length = 10;
    pen.storage_precision = false;
    const Dataset all = build_dataset(9, 1.0, 6, pen);
    CHECK(std::abs(batch_report(all.batch).aggregate.penetrate_m - 0.30) < 1e-9);
    for (const auto& r : all.records) {
        REQUIRE(r.spec);
        CHECK(r.spec->kind == ArtifactKind::penetrate);
    }

    const Dataset one = build_dataset(1, 0.5, 7);
    CHECK(one.batch.sequences.size() == 1);
    CHECK(one.records.size() == 1);
    CHECK_FALSE(one.records[0].spec);

    const Dataset mixed = build_dataset(20, 0.55, 8);
    std::size_t corrupted = 0;
    for (std::size_t i = 0; i < mixed.records.size(); ++i) {
        const auto& r = mixed.records[i];
        if (r.spec) ++corrupted;
        const auto got = sample_metrics(mixed.batch.sequences[i]);
        CHECK(std::abs(got.skate_ratio - r.expected.skate_ratio) < 1e-9);
        CHECK(std::abs(got.float_m - r.expected.float_m) < 1e-6);
        CHECK(std::abs(got.penetrate_m - r.expected.penetrate_m) < 1e-6);
        CHECK(std::abs(got.clip_m - r.expected.clip_m) < 1e-6);
    }
    CHECK(corrupted == 11);
    const Dataset again = build_dataset(20, 0.55, 8);
    CHECK(again.batch.sequences == mixed.batch.sequences);

    CHECK_THROWS_AS(build_dataset(0, 0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_dataset(4, 1.5, 1), std::invalid_argument);
}
