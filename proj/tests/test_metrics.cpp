#include <catch_amalgamated.hpp>

#include <cmath>

#include "reinmotion/metrics.hpp"
#include "reinmotion/synthdata.hpp"
#include "support.hpp"

using namespace reinmotion;
using namespace testsupport;

TEST_CASE("metrics vanish on clean sequences") {
    Rng rng(1);
    for (int k = 0; k < 9; ++k) {
        const auto s = generate_clean(random_gait_params(static_cast<GaitClass>(k % 3), rng), rng.next_seed());
        const auto m = sample_metrics(s);
        CHECK(m.skate_ratio == 0.0);
        CHECK(m.float_m == 0.0);
        CHECK(m.penetrate_m == 0.0);
        CHECK(m.clip_m == 0.0);
    }
}

TEST_CASE("float total counts only frames above the threshold") {
    MotionSequence s = standing(12);
    for (std::size_t f = 0; f < 10; ++f) lift_frame(s, f, 0.08);
    lift_frame(s, 10, 0.04);
    CHECK(std::abs(float_total(s) - 0.8) < 1e-12);
}

TEST_CASE("penetrate total sums depth below the ground") {
    MotionSequence s = standing(8, 0.1);
    for (std::size_t f = 2; f < 7; ++f) lift_frame(s, f, -0.02);
    CHECK(std::abs(penetrate_total(s) - 0.10) < 1e-12);
}

TEST_CASE("clip total in shortfall and literal forms") {
    MotionSequence s = standing(10);
    for (std::size_t f = 0; f < 8; ++f) s.set_joint(f, 2, s.joint(f, 1));
    CHECK(std::abs(clip_total(s) - 0.40) < 1e-12);
    MetricsConfig literal;
    literal.clip_form = ClipForm::literal;
    CHECK(clip_total(s, literal) == 0.0);
    s.set_joint(9, 2, s.joint(9, 1) + Vec3{0.03, 0.0, 0.0});
    CHECK(std::abs(clip_total(s, literal) - 0.03) < 1e-12);
    CHECK(std::abs(clip_total(s) - (0.40 + 0.02)) < 1e-12);
}

TEST_CASE("skate ratio counts sliding contact frames") {
    MotionSequence s = standing(60);
    // Left foot slides 0.04 m per frame over frames 1..12.
    for (std::size_t f = 1; f < 60; ++f) {
        const double x = 0.04 * static_cast<double>(std::min<std::size_t>(f, 12));
        s.set_joint(f, 1, {x, 0.0, 0.15});
    }
    CHECK(std::abs(skate_ratio(s) - 12.0 / 59.0) < 1e-12);

    MotionSequence slow = standing(5);
    for (std::size_t f = 1; f < 5; ++f) slow.set_joint(f, 1, {0.02 * f, 0.0, 0.15});
    CHECK(skate_ratio(slow) == 0.0);
    CHECK_THROWS_AS(skate_ratio(MotionSequence(five_joint(), GroundPlane{}, 1)), std::invalid_argument);
}

TEST_CASE("skate axis option") {
    MotionSequence s = standing(3);
    // Vertical hop of 0.03 m while staying under the contact height.
    s.set_joint(1, 1, {0.0, 0.03, 0.15});
    MetricsConfig horizontal;
    MetricsConfig full;
    full.skate_horizontal_only = false;
    CHECK(skate_ratio(s, horizontal) == 0.0);
    CHECK(std::abs(skate_ratio(s, full) - 1.0) < 1e-12);
}

TEST_CASE("mean reduction divides by the frame count") {
    MotionSequence s = standing(10);
    for (std::size_t f = 0; f < 5; ++f) lift_frame(s, f, -0.02);
    MetricsConfig mean;
    mean.reduction = FrameReduction::mean;
    CHECK(std::abs(penetrate_total(s, mean) - 0.01) < 1e-12);
}

TEST_CASE("batch report aggregates by arithmetic mean") {
    MotionSequence a = standing(12);
    MotionSequence b = standing(12);
    for (std::size_t f = 0; f < 10; ++f) lift_frame(b, f, 0.08);
    const std::vector<MotionSequence> seqs{a, b};
    const auto rep = batch_report(seqs);
    REQUIRE(rep.per_sample.size() == 2);
    CHECK(std::abs(rep.aggregate.float_m - 0.4) < 1e-12);

    const std::vector<MotionSequence> same{b, b, b};
    const auto r3 = batch_report(same);
    CHECK(r3.aggregate.float_m == r3.per_sample[0].float_m);

    const std::vector<MotionSequence> single{b};
    const auto r1 = batch_report(single);
    CHECK(r1.aggregate.float_m == r1.per_sample[0].float_m);
    CHECK(r1.aggregate.skate_ratio == r1.per_sample[0].skate_ratio);
    CHECK_THROWS_AS(batch_report(std::span<const MotionSequence>{}), std::invalid_argument);
}

TEST_CASE("metrics are invariant to horizontal translation") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const MotionSequence s = random_motion(6, rng, 0.2);
        MotionSequence moved = s;
        const Vec3 d{rng.uniform(-5, 5), 0.0, rng.uniform(-5, 5)};
        for (std::size_t f = 0; f < s.frame_count(); ++f) {
            for (std::size_t j = 0; j < s.joint_count(); ++j) moved.set_joint(f, j, s.joint(f, j) + d);
        }
        const auto a = sample_metrics(s);
        const auto b = sample_metrics(moved);
        CHECK(a.skate_ratio == b.skate_ratio);
        CHECK(a.float_m == b.float_m);
        CHECK(a.penetrate_m == b.penetrate_m);
        CHECK(std::abs(a.clip_m - b.clip_m) < 1e-9);
        CHECK(a.skate_ratio >= 0.0);
        CHECK(a.clip_m >= 0.0);
    }
}

TEST_CASE("report CSV keeps the column order skate, float, penetrate, clip") {
    const std::vector<MotionSequence> seqs{standing(3)};
    const auto csv = report_csv(batch_report(seqs), {"walk_0"});
    CHECK(csv.rfind("sample_id,skate_ratio,float_m,penetrate_m,clip_m\n", 0) == 0);
    CHECK(csv.find("walk_0,0,0,0,0\n") != std::string::npos);
    CHECK(csv.find("aggregate,0,0,0,0\n") != std::string::npos);
    const auto j = to_json(batch_report(seqs));
    CHECK(j.at("aggregate").at("float_m").get<double>() == 0.0);
    CHECK(sample_metrics_from_json(j.at("per_sample")[0]).clip_m == 0.0);
}
