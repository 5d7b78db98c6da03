#include <catch_amalgamated.hpp>

#include <cmath>

#include "reinmotion/rewards.hpp"
#include "reinmotion/synthdata.hpp"
#include "support.hpp"

using namespace reinmotion;
using namespace testsupport;
using Catch::Approx;

namespace {

double slide_at(const MotionSequence& s, std::size_t i) { return reward_slide(s, derive_contacts(s), i); }

}  // namespace

TEST_CASE("slide reward gates per foot") {
    MotionSequence s = standing(2);
    CHECK(slide_at(s, 1) == 1.0);

    // Left foot slides 0.10 m on the floor; right foot lifted out of contact and moved.
    s.set_joint(1, 1, {0.10, 0.0, 0.15});
    s.set_joint(1, 2, {0.5, 0.3, -0.15});
    CHECK(slide_at(s, 1) == Approx(0.904837418).epsilon(1e-9));
    CHECK(std::abs(slide_at(s, 1) - std::exp(-0.10)) < 1e-12);

    MotionSequence air = standing(2);
    lift_frame(air, 0, 0.3);
    air.set_joint(1, 1, {0.4, 0.0, 0.15});
    CHECK(slide_at(air, 1) == 1.0);
    CHECK_THROWS_AS(slide_at(s, 0), std::invalid_argument);
}

TEST_CASE("slide norm covers the stacked displacement of both feet") {
    MotionSequence s = standing(2);
    s.set_joint(1, 1, {0.03, 0.0, 0.15 + 0.04});
    s.set_joint(1, 2, {0.0, 0.01, -0.15});
    const double expected = std::exp(-std::sqrt(0.03 * 0.03 + 0.04 * 0.04 + 0.01 * 0.01));
    CHECK(std::abs(slide_at(s, 1) - expected) < 1e-12);
}

TEST_CASE("float reward") {
    const RewardConfig cfg;
    MotionSequence s = standing(2);
    CHECK(reward_float(s, cfg, 0) == 1.0);
    lift_frame(s, 1, 0.30);
    CHECK(std::abs(reward_float(s, cfg, 1) - 0.740818220681718) < 1e-12);
    MotionSequence below = standing(2);
    lift_frame(below, 1, -0.1);
    CHECK(reward_float(below, cfg, 1) == 1.0);

    RewardConfig tol;
    tol.float_tolerance = 0.05;
    MotionSequence slight = standing(2);
    lift_frame(slight, 1, 0.04);
    CHECK(reward_float(slight, tol, 1) == 1.0);
    CHECK(reward_float(slight, cfg, 1) == std::exp(-slight.joint(1, 1).y));
}

TEST_CASE("penetrate reward") {
    MotionSequence s = standing(2);
    CHECK(reward_penetrate(s, 0) == 1.0);
    lift_frame(s, 1, -0.04);
    CHECK(std::abs(reward_penetrate(s, 1) - 0.960789439152323) < 1e-12);
    MotionSequence deep = standing(2);
    lift_frame(deep, 1, -1.0);
    CHECK(std::abs(reward_penetrate(deep, 1) - 0.367879441171442) < 1e-12);
}

TEST_CASE("clip reward in both forms") {
    RewardConfig severity;
    RewardConfig literal;
    literal.clip_form = ClipForm::literal;
    MotionSequence apart = standing(2);
    CHECK(reward_clip(apart, severity, 0) == 1.0);

    MotionSequence together = standing(2);
    together.set_joint(0, 2, together.joint(0, 1));
    CHECK(std::abs(reward_clip(together, severity, 0) - 0.951229424500714) < 1e-12);
    CHECK(reward_clip(together, literal, 0) == 1.0);

    MotionSequence near = standing(2);
    near.set_joint(0, 2, near.joint(0, 1) + Vec3{0.0, 0.0, 0.02});
    CHECK(std::abs(reward_clip(near, severity, 0) - std::exp(-(0.05 - 0.02))) < 1e-12);
    CHECK(std::abs(reward_clip(near, literal, 0) - std::exp(-0.02)) < 1e-12);
}

TEST_CASE("frame totals add the four components") {
    const RewardConfig cfg;
    MotionSequence s = standing(2);
    auto fr = frame_reward(s, derive_contacts(s), cfg, 1);
    CHECK(fr.total == 4.0);

    s.set_joint(1, 1, {0.10, 0.0, 0.15});
    fr = frame_reward(s, derive_contacts(s), cfg, 1);
    CHECK(std::abs(fr.total - 3.904837418035960) < 1e-12);

    // Floating feet count as in contact under a generous contact threshold, so a
    // 0.10 m slide and a 0.30 m float can occur in the same frame.
    RewardConfig loose;
    loose.contact_threshold = 0.5;
    MotionSequence f = standing(2);
    lift_frame(f, 0, 0.30);
    lift_frame(f, 1, 0.30);
    f.set_joint(1, 1, f.joint(1, 1) + Vec3{0.10, 0.0, 0.0});
    fr = frame_reward(f, derive_contacts(f, loose.contact_threshold), loose, 1);
    CHECK(std::abs(fr.total - (std::exp(-0.30) + std::exp(-0.10) + 2.0)) < 1e-12);
    CHECK(std::abs(fr.total - 3.645655) < 1e-6);
}

TEST_CASE("sequence rewards cover frames 1..F-1") {
    const RewardConfig cfg;
    const auto two = sequence_rewards(standing(2), cfg);
    REQUIRE(two.size() == 1);
    CHECK(two[0].total == 4.0);
    CHECK(sequence_rewards(standing(7), cfg).size() == 6);
    CHECK_THROWS_AS(sequence_rewards(MotionSequence(five_joint(), GroundPlane{}, 1), cfg), std::invalid_argument);
}

TEST_CASE("clean generated gaits score 4 on every frame") {
    Rng rng(21);
    const RewardConfig cfg;
    for (int k = 0; k < 9; ++k) {
        const auto s = generate_clean(random_gait_params(static_cast<GaitClass>(k % 3), rng), rng.next_seed());
        for (const auto& fr : sequence_rewards(s, cfg)) CHECK(std::abs(fr.total - 4.0) < 1e-12);
    }
}

TEST_CASE("penetration over frames 10-19 lowers exactly the expected totals") {
    Rng rng(4);
    GaitParams p = random_gait_params(GaitClass::walk, rng);
    const MotionSequence clean = generate_clean(p, 99);
    auto [dirty, rec] = inject_artifact(clean, {ArtifactKind::penetrate, 10, 19, 0.03});
    const auto totals = total_rewards(sequence_rewards(dirty, RewardConfig{}));
    const double drop = 1.0 - std::exp(-0.03);
    // Interior frames lose only the penetration term.
    for (std::size_t i = 11; i <= 19; ++i) CHECK(std::abs(totals[i - 1] - (4.0 - drop)) < 1e-9);
    // Entering and leaving the range also shifts the stance foot vertically by 0.03 m,
    // which the 3D slide term registers once at each boundary.
    CHECK(std::abs(totals[10 - 1] - (4.0 - 2.0 * drop)) < 1e-9);
    CHECK(std::abs(totals[20 - 1] - (4.0 - drop)) < 1e-9);
    for (std::size_t i = 1; i < totals.size(); ++i) {
        if (i < 10 || i > 20) CHECK(totals[i - 1] == 4.0);
    }
    // The penetration component alone matches the injector's record on every frame.
    const auto frames = sequence_rewards(dirty, RewardConfig{});
    for (std::size_t i = 1; i < dirty.frame_count(); ++i) {
        CHECK(std::abs((1.0 - frames[i - 1].penetrate) - rec.target_reward_drop[i - 1]) < 1e-12);
    }
}

TEST_CASE("reward components stay in (0, 1] and gates are exclusive") {
    Rng rng(8);
    const RewardConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        const MotionSequence s = random_motion(5, rng, 0.4);
        for (const auto& fr : sequence_rewards(s, cfg)) {
            for (double v : {fr.slide, fr.float_r, fr.penetrate, fr.clip}) {
                CHECK(v > 0.0);
                CHECK(v <= 1.0);
            }
            CHECK_FALSE((fr.float_r < 1.0 && fr.penetrate < 1.0));
            CHECK(std::abs(fr.total - (fr.slide + fr.float_r + fr.penetrate + fr.clip)) < 1e-15);
        }
    }
}

TEST_CASE("rewards decrease strictly with violation size") {
    const RewardConfig cfg;
    double prev_float = 1.0;
    double prev_pen = 1.0;
    double prev_slide = 1.0;
    double prev_clip = 1.0;
    for (int k = 1; k <= 10; ++k) {
        const double m = 0.004 * k;
        MotionSequence up = standing(2);
        lift_frame(up, 1, m);
        MotionSequence down = standing(2);
        lift_frame(down, 1, -m);
        MotionSequence slide = standing(2);
        slide.set_joint(1, 1, {m, 0.0, 0.15});
        MotionSequence clip = standing(2);
        clip.set_joint(1, 2, clip.joint(1, 1) + Vec3{0.0, 0.0, 0.05 - m});
        const double rf = reward_float(up, cfg, 1);
        const double rp = reward_penetrate(down, 1);
        const double rs = slide_at(slide, 1);
        const double rc = reward_clip(clip, cfg, 1);
        CHECK(rf < prev_float);
        CHECK(rp < prev_pen);
        CHECK(rs < prev_slide);
        CHECK(rc < prev_clip);
        prev_float = rf;
        prev_pen = rp;
        prev_slide = rs;
        prev_clip = rc;
    }
}

TEST_CASE("rewards are invariant to horizontal translation") {
    Rng rng(12);
    const RewardConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const MotionSequence s = random_motion(5, rng, 0.3);
        MotionSequence moved = s;
        const double dx = rng.uniform(-3, 3);
        const double dz = rng.uniform(-3, 3);
        for (std::size_t f = 0; f < s.frame_count(); ++f) {
            for (std::size_t j = 0; j < s.joint_count(); ++j) moved.set_joint(f, j, s.joint(f, j) + Vec3{dx, 0.0, dz});
        }
        const auto a = sequence_rewards(s, cfg);
        const auto b = sequence_rewards(moved, cfg);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs(a[i].slide - b[i].slide) < 1e-9);
            CHECK(a[i].float_r == b[i].float_r);
            CHECK(a[i].penetrate == b[i].penetrate);
            CHECK(std::abs(a[i].clip - b[i].clip) < 1e-9);
        }
    }
}

TEST_CASE("reward CSV layout") {
    const auto csv = rewards_csv(sequence_rewards(standing(3), RewardConfig{}));
    CHECK(csv.rfind("frame,slide,float,penetrate,clip,total\n", 0) == 0);
    CHECK(csv.find("\n1,1,1,1,1,4\n") != std::string::npos);
    CHECK(csv.find("\n2,1,1,1,1,4\n") != std::string::npos);
}

TEST_CASE("reward config validation") {
    RewardConfig c;
    c.clip_threshold = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = RewardConfig{};
    c.float_tolerance = -0.1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(clip_form_from_string("literal") == ClipForm::literal);
    CHECK_THROWS_AS(clip_form_from_string("other"), std::invalid_argument);
}
