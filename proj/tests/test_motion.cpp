#include <catch_amalgamated.hpp>

#include <fstream>
#include <limits>

#include "reinmotion/motion.hpp"
#include "reinmotion/motion_io.hpp"
#include "reinmotion/synthdata.hpp"
#include "support.hpp"

using namespace reinmotion;
using namespace testsupport;

TEST_CASE("lowest joint height over a constant field and a min") {
    MotionSequence s = standing(2);
    for (std::size_t j = 0; j < 5; ++j) s.set_joint(0, j, {0.1 * j, 0.3, 0.0});
    CHECK(lowest_joint_height(s, 0) == 0.3);

    const double ys[] = {0.0, 0.5, 1.2, 0.7, 0.9};
    for (std::size_t j = 0; j < 5; ++j) s.set_joint(1, j, {0.0, ys[j], 0.0});
    CHECK(lowest_joint_height(s, 1) == 0.0);
    CHECK_THROWS_AS(lowest_joint_height(s, 2), std::out_of_range);
}

TEST_CASE("lowest joint height never exceeds any joint") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const MotionSequence s = random_motion(4, rng);
        for (std::size_t f = 0; f < 4; ++f) {
            const double low = lowest_joint_height(s, f);
            for (std::size_t j = 0; j < s.joint_count(); ++j) CHECK(low <= s.joint(f, j).y);
        }
    }
}

TEST_CASE("feet-only scope ignores lower non-foot joints") {
    MotionSequence s = standing(2);
    s.set_joint(0, 3, {0.0, -0.2, 0.0});
    CHECK(lowest_joint_height(s, 0, JointScope::all_joints) == -0.2);
    CHECK(lowest_joint_height(s, 0, JointScope::feet_only) == 0.0);
}

TEST_CASE("contact labels follow the height rule") {
    MotionSequence s = standing(3);
    auto c = derive_contacts(s, 0.05);
    for (std::size_t f = 0; f < 3; ++f) {
        CHECK(c.in_contact(f, Foot::left));
        CHECK(c.in_contact(f, Foot::right));
    }
    for (std::size_t f = 0; f < 3; ++f) lift_frame(s, f, 0.2);
    c = derive_contacts(s, 0.05);
    for (std::size_t f = 0; f < 3; ++f) CHECK_FALSE(c.in_contact(f, Foot::left));
    CHECK_THROWS_AS(derive_contacts(s, 0.0), std::invalid_argument);
}

TEST_CASE("contact labels on a clean gait match the generator's stance mask") {
    Rng rng(11);
    for (int k = 0; k < 6; ++k) {
        const auto params = random_gait_params(static_cast<GaitClass>(k % 3), rng);
        const MotionSequence s = generate_clean(params, rng.next_seed());
        const auto c = derive_contacts(s);
        for (std::size_t f = 0; f < s.frame_count(); ++f) {
            for (Foot foot : {Foot::left, Foot::right}) {
                // Stance feet sit exactly on the floor; swing feet clear it by the swing clearance.
                const double h = s.foot(f, foot).y;
                CHECK((h == 0.0 || h >= kSwingClearance - 1e-6));
                CHECK(c.in_contact(f, foot) == (h == 0.0));
            }
            CHECK(lowest_joint_height(s, f) == 0.0);
        }
    }
}

TEST_CASE("raising the contact threshold never removes a contact") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const MotionSequence s = random_motion(6, rng, 0.3);
        const auto lo = derive_contacts(s, 0.02);
        const auto hi = derive_contacts(s, 0.2);
        for (std::size_t f = 0; f < 6; ++f) {
            for (Foot foot : {Foot::left, Foot::right}) {
                if (lo.in_contact(f, foot)) CHECK(hi.in_contact(f, foot));
            }
        }
    }
}

TEST_CASE("validation rejects short or non-finite sequences") {
    MotionSequence one(five_joint(), GroundPlane{0.0}, 1);
    CHECK_THROWS_AS(one.validate(), std::invalid_argument);
    MotionSequence s = standing(4);
    s.set_joint(2, 1, {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0});
    try {
        s.validate();
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("frame 2") != std::string::npos);
    }
    Skeleton bad = five_joint();
    bad.right_foot = bad.left_foot;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("motion files round-trip generator sequences exactly") {
    const auto dir = temp_dir("motion_io");
    Rng rng(2);
    for (int k = 0; k < 6; ++k) {
        const MotionSequence s = generate_clean(random_gait_params(static_cast<GaitClass>(k % 3), rng), rng.next_seed());
        const auto path = dir / ("m" + std::to_string(k) + ".json");
        write_motion(s, path);
        const MotionSequence back = read_motion(path);
        CHECK(back == s);
        write_motion(back, dir / "again.json");
        std::ifstream a(path), b(dir / "again.json");
        const std::string ta((std::istreambuf_iterator<char>(a)), {});
        const std::string tb((std::istreambuf_iterator<char>(b)), {});
        CHECK(ta == tb);
    }
}

TEST_CASE("stored values round-trip at 32-bit width") {
    MotionSequence s = standing(2);
    s.set_joint(1, 0, {0.1, 0.2, 1.0 / 3.0});
    const MotionSequence back = motion_from_string(motion_to_string(s));
    CHECK(back.joint(1, 0).x == to_storage_precision(0.1));
    CHECK(back.joint(1, 0).z == to_storage_precision(1.0 / 3.0));
    MotionSequence q = s;
    quantize_to_storage(q);
    CHECK(motion_from_string(motion_to_string(q)) == q);
}

namespace {

std::string error_of(const std::string& text) {
    try {
        motion_from_string(text);
    } catch (const MotionParseError& e) {
        return e.what();
    }
    return {};
}

const char* kHeader = R"("version":1,"fps":20,"axis_up":"y","ground_height":0,"left_foot":1,"right_foot":2,)";

}  // namespace

TEST_CASE("parse errors name the offending field or frame") {
    const std::string four_names = std::string("{") + kHeader +
                                   R"("joint_names":["a","b","c","d"],"frames":[[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]],)"
                                   R"([[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]]]})";
    CHECK(error_of(four_names).find("joint_names") != std::string::npos);

    const std::string with_nan = std::string("{") + kHeader +
                                 R"("joint_names":["a","b","c","d","e"],"frames":[[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]],)"
                                 R"([[0,0,0],[0,NaN,0],[0,0,0],[0,0,0],[0,0,0]]]})";
    CHECK(error_of(with_nan).find("malformed") != std::string::npos);

    const std::string with_null = std::string("{") + kHeader +
                                  R"("joint_names":["a","b","c","d","e"],"frames":[[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]],)"
                                  R"([[0,0,0],[0,null,0],[0,0,0],[0,0,0],[0,0,0]]]})";
    CHECK(error_of(with_null).find("frame 1") != std::string::npos);

    const std::string no_fps = R"({"version":1,"axis_up":"y","ground_height":0,"left_foot":1,"right_foot":2,"joint_names":["a","b"],"frames":[]})";
    CHECK(error_of(no_fps).find("fps") != std::string::npos);

    CHECK(error_of("{not json").find("malformed") != std::string::npos);
}

TEST_CASE("batches require shared skeletons and frame counts") {
    MotionBatch b;
    b.sequences = {standing(3), standing(4)};
    b.condition_ids = {0, 1};
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
    b.sequences[1] = standing(3);
    CHECK_NOTHROW(b.validate());
    b.condition_ids.pop_back();
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}
