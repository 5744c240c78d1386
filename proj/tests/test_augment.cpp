#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "acp/augment.hpp"
#include "support.hpp"

using namespace acp;

namespace {

Raster random_raster(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Raster r(w, h);
    for (auto& p : r.pixels()) p = u(rng);
    return r;
}

// Independent corner rotation: complex multiplication about the frame center.
std::array<std::pair<double, double>, 4> rotated_corners(const BoundingBox& b, double deg, double w, double h) {
    const double a = deg * std::numbers::pi / 180.0;
    const std::complex<double> turn = std::polar(1.0, a), center(w / 2, h / 2);
    std::array<std::pair<double, double>, 4> out;
    const std::array<std::complex<double>, 4> corners{{{b.x_min, b.y_min}, {b.x_max, b.y_min},
                                                       {b.x_min, b.y_max}, {b.x_max, b.y_max}}};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto p = center + (corners[i] - center) * turn;
        out[i] = {p.real(), p.imag()};
    }
    return out;
}

}  // namespace

TEST(Brightness, ClampsAndShifts) {
    Raster r(3, 1, std::vector<float>{0.95f, 0.5f, 0.05f});
    const Raster up = apply_brightness(r, 0.2);
    EXPECT_FLOAT_EQ(up.at(0, 0), 1.0f);
    EXPECT_NEAR(up.at(1, 0), 0.7f, 1e-6);
    const Raster down = apply_brightness(Raster(4, 4, 0.5f), -0.1);
    for (float p : down.pixels()) EXPECT_NEAR(p, 0.4f, 1e-6);
    EXPECT_EQ(apply_brightness(r, 0.0), r);
}

TEST(Brightness, StaysInUnitRange) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> delta(-1.5, 1.5);
    for (int t = 0; t < 200; ++t) {
        const Raster out = apply_brightness(random_raster(rng, 9, 7), delta(rng));
        for (float p : out.pixels()) {
            ASSERT_GE(p, 0.0f);
            ASSERT_LE(p, 1.0f);
        }
    }
}

TEST(Hflip, WorkedExamples) {
    const Raster r(100, 50, 0.0f);
    const std::vector<BoundingBox> boxes{{10, 20, 30, 40}, {40, 0, 60, 10}};
    const auto [flipped, fb] = apply_hflip(r, boxes);
    EXPECT_EQ(fb[0], (BoundingBox{70, 20, 90, 40}));
    EXPECT_EQ(fb[1], boxes[1]);

    Raster ramp(4, 1, std::vector<float>{0.1f, 0.2f, 0.3f, 0.4f});
    EXPECT_EQ(apply_hflip(ramp, {}).first, Raster(4, 1, std::vector<float>{0.4f, 0.3f, 0.2f, 0.1f}));
}

TEST(Hflip, IsAnInvolution) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
        const int w = 1 + int(rng() % 60), h = 1 + int(rng() % 40);
        const Raster r = random_raster(rng, w, h);
        // Coordinates on a 1/256 px grid make W - (W - x) exact.
        std::vector<BoundingBox> boxes;
        for (int k = 0; k < 3; ++k) {
            BoundingBox b = acp::testing::random_box(rng, double(w), 0.5, 20.0);
            for (double* v : {&b.x_min, &b.y_min, &b.x_max, &b.y_max}) *v = std::round(*v * 256.0) / 256.0;
            boxes.push_back(b);
        }
        const auto once = apply_hflip(r, boxes);
        const auto twice = apply_hflip(once.first, once.second);
        ASSERT_EQ(twice.first, r);
        ASSERT_EQ(twice.second, boxes);
    }
}

TEST(Hflip, ArbitraryCoordinatesRoundTripToRounding) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 1000; ++t) {
        const BoundingBox b = acp::testing::random_box(rng, 500.0, 0.1, 50.0);
        const Raster r(600, 2);
        const auto once = apply_hflip(r, std::vector<BoundingBox>{b});
        const BoundingBox back = apply_hflip(r, once.second).second[0];
        ASSERT_NEAR(back.x_min, b.x_min, 1e-12);
        ASSERT_NEAR(back.x_max, b.x_max, 1e-12);
        ASSERT_EQ(back.y_min, b.y_min);
    }
}

TEST(Rotation, ZeroAngleIsIdentity) {
    std::mt19937_64 rng(3);
    const Raster r = random_raster(rng, 20, 12);
    const std::vector<BoundingBox> boxes{{1, 2, 5, 9}};
    const auto [out, ob] = apply_rotation(r, boxes, 0.0);
    EXPECT_EQ(out, r);
    EXPECT_EQ(ob, boxes);
}

TEST(Rotation, NinetyDegreesOnSquareFrame) {
    const ImageDims dims{100, 100};
    const BoundingBox box{10, 20, 30, 40};
    const auto corners = rotated_corners(box, 90.0, 100, 100);
    double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
    for (const auto& [x, y] : corners) {
        x0 = std::min(x0, x), x1 = std::max(x1, x);
        y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
    const BoundingBox env = rotated_envelope(box, 90.0, dims);
    EXPECT_NEAR(env.x_min, x0, 1e-9);
    EXPECT_NEAR(env.y_min, y0, 1e-9);
    EXPECT_NEAR(env.x_max, x1, 1e-9);
    EXPECT_NEAR(env.y_max, y1, 1e-9);
    // (x, y) -> (100 - y, x) about the center (50, 50)
    EXPECT_NEAR(env.x_min, 60, 1e-9);
    EXPECT_NEAR(env.x_max, 80, 1e-9);
    EXPECT_NEAR(env.y_min, 10, 1e-9);
    EXPECT_NEAR(env.y_max, 30, 1e-9);

    // The raster turns with the boxes: a quarter turn of a square image is a
    // pixel permutation.
    Raster r(100, 100, 0.0f);
    for (int y = 20; y < 40; ++y)
        for (int x = 10; x < 30; ++x) r.at(x, y) = 1.0f;
    const auto [out, ob] = apply_rotation(r, std::vector<BoundingBox>{box}, 90.0);
    ASSERT_EQ(ob.size(), 1u);
    for (int y = 0; y < 100; ++y) {
        for (int x = 0; x < 100; ++x) {
            const bool inside = x >= 60 && x < 80 && y >= 10 && y < 30;
            ASSERT_NEAR(out.at(x, y), inside ? 1.0f : 0.0f, 1e-5) << x << "," << y;
        }
    }
}

TEST(Rotation, EnvelopeContainsEveryRotatedCorner) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> angle(-180.0, 180.0);
    for (int t = 0; t < 1000; ++t) {
        const ImageDims dims{50 + int(rng() % 300), 50 + int(rng() % 300)};
        const BoundingBox box = acp::testing::random_box(rng, 250.0, 0.5, 60.0);
        const double deg = angle(rng);
        const BoundingBox env = rotated_envelope(box, deg, dims);
        for (const auto& [x, y] : rotated_corners(box, deg, dims.width, dims.height)) {
            ASSERT_LE(env.x_min, x + 1e-9);
            ASSERT_GE(env.x_max, x - 1e-9);
            ASSERT_LE(env.y_min, y + 1e-9);
            ASSERT_GE(env.y_max, y - 1e-9);
        }
    }
}

TEST(Rotation, ForwardThenBackContainsOriginal) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> angle(-15.0, 15.0);
    for (int t = 0; t < 500; ++t) {
        const ImageDims dims{200, 150};
        const BoundingBox box = acp::testing::random_box(rng, 120.0, 1.0, 40.0);
        const double deg = angle(rng);
        const BoundingBox back = rotated_envelope(rotated_envelope(box, deg, dims), -deg, dims);
        ASSERT_LE(back.x_min, box.x_min + 1e-9);
        ASSERT_LE(back.y_min, box.y_min + 1e-9);
        ASSERT_GE(back.x_max, box.x_max - 1e-9);
        ASSERT_GE(back.y_max, box.y_max - 1e-9);
    }
}

TEST(Rotation, BoxesStayInFrameAndDropRuleIsHalfArea) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> angle(-30.0, 30.0);
    for (int t = 0; t < 500; ++t) {
        const Raster r(60, 40, 0.5f);
        std::vector<BoundingBox> boxes;
        for (int k = 0; k < 4; ++k) {
            BoundingBox b = acp::testing::random_box(rng, 70.0, 1.0, 25.0);
            boxes.push_back(b.translated(-5.0, -5.0));
        }
        const double deg = angle(rng);
        const auto [out, kept] = apply_rotation(r, boxes, deg);
        std::vector<BoundingBox> expected;
        for (const auto& b : boxes) {
            const BoundingBox env = rotated_envelope(b, deg, r.dims());
            const double w = std::max(0.0, std::min(env.x_max, 60.0) - std::max(env.x_min, 0.0));
            const double h = std::max(0.0, std::min(env.y_max, 40.0) - std::max(env.y_min, 0.0));
            if (w > 0 && h > 0 && w * h >= 0.5 * env.area()) expected.push_back(clip_to(env, r.dims().frame()));
        }
        ASSERT_EQ(kept, expected);
        for (const auto& b : kept) ASSERT_TRUE(r.dims().frame().contains(b));
    }
}

TEST(Rotation, BrightPixelFollowsRotatePoint) {
    Raster r(81, 61, 0.0f);
    for (int y = 40; y < 43; ++y)
        for (int x = 60; x < 63; ++x) r.at(x, y) = 1.0f;
    const auto [out, ob] = apply_rotation(r, {}, 12.0);
    const auto [px, py] = rotate_point(61.5, 41.5, 12.0, r.dims());
    EXPECT_GT(out.at(int(px), int(py)), 0.8f);
}

TEST(Plan, CountsAndIdentity) {
    std::mt19937_64 rng(7);
    const Raster r = random_raster(rng, 30, 20);
    const std::vector<BoundingBox> boxes{{5, 5, 15, 12}};
    const AugmentConfig config;
    EXPECT_TRUE(augment_plan("s", r, boxes, config, 9, 0).empty());
    const auto one = augment_plan("s", r, boxes, config, 9, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].raster, r);
    EXPECT_EQ(one[0].boxes, boxes);
    EXPECT_TRUE(one[0].provenance.ops.empty());
    EXPECT_EQ(one[0].provenance.source_id, "s");
}

TEST(Plan, DeterministicAndIndexAddressable) {
    std::mt19937_64 rng(8);
    const Raster r = random_raster(rng, 24, 18);
    const std::vector<BoundingBox> boxes{{3, 4, 12, 10}};
    const AugmentConfig config;
    const auto a = augment_plan("s", r, boxes, config, 77, 200);
    const auto b = augment_plan("s", r, boxes, config, 77, 200);
    ASSERT_EQ(a, b);
    EXPECT_EQ(augment_one("s", r, boxes, config, 77, 123), a[123]);
    EXPECT_NE(augment_plan("s", r, boxes, config, 78, 200), a);
    for (const auto& s : a) {
        for (float p : s.raster.pixels()) ASSERT_TRUE(p >= 0.0f && p <= 1.0f);
        for (const auto& box : s.boxes) ASSERT_TRUE(r.dims().frame().contains(box));
        for (const auto& op : s.provenance.ops) {
            if (op.kind == AugmentKind::rotate) {
                EXPECT_GE(op.angle_deg, -15.0);
                EXPECT_LE(op.angle_deg, 15.0);
            }
            if (op.kind == AugmentKind::brightness) EXPECT_LE(std::abs(op.brightness_delta), 0.3);
        }
    }
}

TEST(Plan, ConfigValidation) {
    AugmentConfig c;
    c.angle_range = {10, -10};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.flip_probability = 1.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}
