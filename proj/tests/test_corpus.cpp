#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "acp/corpus.hpp"
#include "acp/png_io.hpp"
#include "support.hpp"

using namespace acp;
using acp::testing::TempDir;

namespace {

std::vector<std::string> make_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("img" + std::to_string(i));
    return ids;
}

Manifest small_manifest(const TempDir& dir, int count) {
    Manifest m;
    for (int i = 0; i < count; ++i) {
        const std::string id = "p" + std::to_string(i);
        Raster r(64, 32, 0.25f * float(i % 4));
        write_png_gray(dir / (id + ".png"), r, 8);
        m.images.push_back({id, dir / (id + ".png"), "dev", 64, 32});
        Annotation a;
        a.image_id = id;
        a.annotator_ids = {"a", "b"};
        if (i % 2 == 0) a.boxes.push_back({2, 3, 10, 12});
        m.annotations.push_back(a);
    }
    return m;
}

}  // namespace

TEST(Manifest, EmptyRoundTrip) {
    TempDir dir("manifest");
    save_manifest({}, dir / "m.json");
    const Manifest m = load_manifest(dir / "m.json");
    EXPECT_TRUE(m.images.empty());
    EXPECT_TRUE(m.annotations.empty());
}

TEST(Manifest, RoundTripKeepsRecordsAndRelativePaths) {
    TempDir dir("manifest");
    const Manifest m = small_manifest(dir, 5);
    save_manifest(m, dir / "m.json");
    const std::string text = read_text_file(dir / "m.json");
    EXPECT_NE(text.find("\"p0.png\""), std::string::npos);

    const Manifest back = load_manifest(dir / "m.json");
    ASSERT_EQ(back.images.size(), 5u);
    EXPECT_EQ(back.images[3].id, "p3");
    EXPECT_TRUE(std::filesystem::equivalent(back.images[3].path, dir / "p3.png"));
    EXPECT_TRUE(back.has_acp("p2"));
    EXPECT_FALSE(back.has_acp("p1"));
    EXPECT_EQ(back.annotations[0].boxes, m.annotations[0].boxes);
}

TEST(Manifest, DegenerateBoxIsValidationError) {
    TempDir dir("manifest");
    Manifest m = small_manifest(dir, 2);
    save_manifest(m, dir / "m.json");
    std::string text = read_text_file(dir / "m.json");
    // x_max 10 -> 2 collapses the first box onto its x_min
    const auto pos = text.find("\"x_max\": 10.0");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 13, "\"x_max\": 2.0");
    write_file_atomic(dir / "m.json", text);
    EXPECT_THROW(load_manifest(dir / "m.json"), ValidationError);
}

TEST(Manifest, MissingImageNamesTheId) {
    TempDir dir("manifest");
    Manifest m = small_manifest(dir, 3);
    save_manifest(m, dir / "m.json");
    std::filesystem::remove(dir / "p1.png");
    try {
        load_manifest(dir / "m.json");
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_NE(std::string(e.what()).find("p1"), std::string::npos);
    }
}

TEST(Manifest, VersionMismatchRefused) {
    TempDir dir("manifest");
    write_file_atomic(dir / "m.json", R"({"version": 99, "images": [], "annotations": []})");
    EXPECT_THROW(load_manifest(dir / "m.json"), LoadError);
}

TEST(Manifest, DuplicateIdsAndDanglingAnnotationsRejected) {
    TempDir dir("manifest");
    Manifest m = small_manifest(dir, 2);
    m.images[1].id = "p0";
    EXPECT_THROW(validate_manifest(m), ValidationError);
    m = small_manifest(dir, 2);
    m.annotations[0].image_id = "ghost";
    EXPECT_THROW(validate_manifest(m), ValidationError);
}

TEST(Split, SixtyFiveImages) {
    const auto s = split_sizes(65, {});
    EXPECT_EQ(s.train, 45u);
    EXPECT_EQ(s.val, 6u);
    EXPECT_EQ(s.test, 14u);
}

TEST(Split, TooFewImages) {
    const auto ids = make_ids(2);
    EXPECT_THROW(split_dataset(ids, {}, {}, 1), SplitError);
}

TEST(Split, FractionsMustSumToOne) { EXPECT_THROW(split_sizes(10, {0.7, 0.2, 0.2}), SplitError); }

// Exhaustive over n in [3, 1000]: sizes follow the floor rule, the partition
// is a disjoint cover, reruns agree, and positives spread over the splits.
TEST(Split, PropertiesForAllSizes) {
    std::mt19937_64 rng(99);
    for (std::size_t n = 3; n <= 1000; ++n) {
        const auto ids = make_ids(n);
        auto labels = std::make_unique<bool[]>(n);
        std::size_t npos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = (rng() % 3) != 0;
            npos += labels[i];
        }
        const std::span<const bool> has(labels.get(), n);
        const std::uint64_t seed = rng();
        const DatasetSplit a = split_dataset(ids, has, {}, seed);
        const DatasetSplit b = split_dataset(ids, has, {}, seed);
        ASSERT_EQ(a, b) << "n=" << n;

        const auto train = std::size_t(std::floor(0.7 * double(n) + 1e-9));
        const auto val = std::size_t(std::floor(0.1 * double(n) + 1e-9));
        ASSERT_EQ(a.train.size(), train) << "n=" << n;
        ASSERT_EQ(a.val.size(), val) << "n=" << n;
        ASSERT_EQ(a.test.size(), n - train - val) << "n=" << n;

        std::multiset<std::string> all;
        for (const auto* part : {&a.train, &a.val, &a.test}) all.insert(part->begin(), part->end());
        ASSERT_EQ(all.size(), n);
        ASSERT_EQ(std::set<std::string>(all.begin(), all.end()), std::set<std::string>(ids.begin(), ids.end()));

        auto positives = [&](const std::vector<std::string>& part) {
            std::size_t k = 0;
            for (const auto& id : part) k += labels[std::stoul(id.substr(3))];
            return k;
        };
        const double prevalence = double(npos) / double(n);
        for (const auto* part : {&a.train, &a.val, &a.test}) {
            if (part->empty()) continue;
            const double expected = prevalence * double(part->size());
            EXPECT_LE(std::abs(double(positives(*part)) - expected), 2.0) << "n=" << n;
            if (npos >= 3) EXPECT_GE(positives(*part), 1u) << "n=" << n;
            if (n - npos >= 3 && part->size() >= 2) EXPECT_LT(positives(*part), part->size()) << "n=" << n;
        }
    }
}

TEST(Split, DifferentSeedsUsuallyDiffer) {
    const auto ids = make_ids(100);
    EXPECT_NE(split_dataset(ids, {}, {}, 1).train, split_dataset(ids, {}, {}, 2).train);
}

TEST(Roi, EnvelopePlusMargin) {
    const ImageDims dims{300, 500};
    Annotation left;
    left.image_id = "l";
    left.boxes = {{10, 10, 20, 20}};
    Annotation right;
    right.image_id = "r";
    right.boxes = {{200, 300, 250, 400}};
    RoiSpec spec = compute_roi_spec(std::vector<Annotation>{left, right}, dims, 25);
    EXPECT_EQ(spec.right, (BoundingBox{175, 275, 275, 425}));
    EXPECT_EQ(spec.left, (BoundingBox{0, 0, 45, 45}));  // clamped at the frame edge

    right.boxes = {{200, 300, 250, 400}, {220, 350, 290, 480}};
    spec = compute_roi_spec(std::vector<Annotation>{left, right}, dims, 0);
    EXPECT_EQ(spec.right, (BoundingBox{200, 300, 290, 480}));
    EXPECT_EQ(spec.derived_from, (std::vector<std::string>{"l", "r"}));
}

// Sides are named by image half. A box at x 100..200 of a wide frame is on
// the viewer's left (the patient's right on a panoramic film).
TEST(Roi, WorkedExamplesOnWideFrame) {
    const ImageDims dims{1000, 600};
    Annotation a;
    a.image_id = "x";
    a.boxes = {{100, 300, 200, 400}, {700, 300, 750, 350}};
    RoiSpec spec = compute_roi_spec(std::vector<Annotation>{a}, dims, 25);
    EXPECT_EQ(spec.left, (BoundingBox{75, 275, 225, 425}));

    a.boxes = {{100, 300, 200, 400}, {150, 350, 260, 480}, {700, 300, 750, 350}};
    spec = compute_roi_spec(std::vector<Annotation>{a}, dims, 0);
    EXPECT_EQ(spec.left, (BoundingBox{100, 300, 260, 480}));

    a.boxes = {{5, 300, 200, 590}, {700, 300, 990, 350}};
    spec = compute_roi_spec(std::vector<Annotation>{a}, dims, 25);
    EXPECT_EQ(spec.left, (BoundingBox{0, 275, 225, 600}));
    EXPECT_EQ(spec.right, (BoundingBox{675, 275, 1000, 375}));
}

TEST(Roi, MissingSideSuggestsOverride) {
    Annotation a;
    a.image_id = "x";
    a.boxes = {{10, 10, 20, 20}};
    try {
        compute_roi_spec(std::vector<Annotation>{a}, {300, 300}, 5);
        FAIL();
    } catch (const RoiError& e) {
        EXPECT_NE(std::string(e.what()).find("roi.override"), std::string::npos);
    }
}

TEST(Roi, PropertiesOnRandomTrainingSets) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        const ImageDims dims{200 + int(rng() % 600), 100 + int(rng() % 400)};
        std::vector<Annotation> anns;
        for (int k = 0; k < 6; ++k) {
            Annotation a;
            a.image_id = "i" + std::to_string(k);
            const double half = 0.5 * dims.width;
            for (int side = 0; side < 2; ++side) {
                const double w = 2 + u(rng) * 30, h = 2 + u(rng) * 30;
                const double x = side == 0 ? u(rng) * (half - w - 1) : half + 1 + u(rng) * (half - w - 2);
                const double y = u(rng) * (dims.height - h);
                a.boxes.push_back({x, y, x + w, y + h});
            }
            anns.push_back(a);
        }
        const double margin = u(rng) * 40;
        const RoiSpec spec = compute_roi_spec(anns, dims, margin);
        EXPECT_FALSE(intersection(spec.left, spec.right).has_value());
        EXPECT_TRUE(dims.frame().contains(spec.left));
        EXPECT_TRUE(dims.frame().contains(spec.right));
        for (const auto& a : anns) {
            for (const auto& b : a.boxes) {
                EXPECT_TRUE(spec.rect(side_of(b, dims)).contains(b));
            }
        }
    }
}

namespace {

// Fraction of `box` inside `rect` from interval arithmetic.
double inside_fraction(const BoundingBox& box, const BoundingBox& rect) {
    const double w = std::max(0.0, std::min(box.x_max, rect.x_max) - std::max(box.x_min, rect.x_min));
    const double h = std::max(0.0, std::min(box.y_max, rect.y_max) - std::max(box.y_min, rect.y_min));
    return w * h / (box.width() * box.height());
}

}  // namespace

TEST(Roi, ExtractTranslatesAndDropsMostlyOutsideBoxes) {
    PanoramicImage img{"x", Raster(400, 200, 0.1f), "dev", 8};
    img.pixels.at(310, 120) = 0.9f;
    RoiSpec spec;
    spec.left = {10, 50, 110, 190};
    spec.right = {300, 100, 390, 190};
    Annotation a;
    a.image_id = "x";
    a.boxes = {{320, 130, 340, 150},   // fully inside right
               {280, 110, 305, 120},   // 20% inside right -> dropped
               {100, 60, 120, 70},     // 50% inside left -> kept, clipped
               {0, 0, 5, 5}};          // outside both
    const auto rois = extract_rois(img, spec, a);
    ASSERT_EQ(rois[1].boxes.size(), 1u);
    EXPECT_EQ(rois[1].boxes[0], (BoundingBox{20, 30, 40, 50}));
    EXPECT_FLOAT_EQ(rois[1].raster.at(10, 20), 0.9f);
    ASSERT_EQ(rois[0].boxes.size(), 1u);
    EXPECT_EQ(rois[0].boxes[0], (BoundingBox{90, 10, 100, 20}));
    EXPECT_EQ(rois[0].raster.width(), 100);
    EXPECT_EQ(rois[0].raster.height(), 140);

    Annotation none;
    none.image_id = "x";
    for (const auto& r : extract_rois(img, spec, none)) EXPECT_TRUE(r.boxes.empty());
}

TEST(Roi, KeepRuleMatchesAreaOracle) {
    PanoramicImage img{"x", Raster(300, 300, 0.0f), "dev", 8};
    RoiSpec spec;
    spec.left = {20, 20, 120, 120};
    spec.right = {180, 20, 280, 120};
    std::mt19937_64 rng(4);
    for (int t = 0; t < 2000; ++t) {
        Annotation a;
        a.image_id = "x";
        const auto box = acp::testing::random_box(rng, 250.0, 2.0, 60.0);
        a.boxes = {box};
        const auto rois = extract_rois(img, spec, a);
        for (int s = 0; s < 2; ++s) {
            const auto& rect = s == 0 ? spec.left : spec.right;
            const bool keep = inside_fraction(box, rect) >= 0.5;
            ASSERT_EQ(rois[s].boxes.size(), keep ? 1u : 0u);
            if (keep) {
                // projecting back lands inside the ROI and re-cropping is identity
                const BoundingBox pano = rois[s].window.to_panoramic(rois[s].boxes[0]);
                EXPECT_TRUE(rect.contains(pano));
                const BoundingBox again = rois[s].window.to_crop(pano);
                EXPECT_NEAR(again.x_min, rois[s].boxes[0].x_min, 1e-9);
                EXPECT_NEAR(again.y_max, rois[s].boxes[0].y_max, 1e-9);
            }
        }
    }
}

TEST(Roi, SpecJsonRoundTrip) {
    TempDir dir("roi");
    RoiSpec spec;
    spec.left = {1, 2, 30, 40};
    spec.right = {50, 2, 90, 40};
    spec.margin_px = 7;
    spec.derived_from = {"a", "b"};
    save_roi_spec(spec, dir / "roi.json");
    EXPECT_EQ(load_roi_spec(dir / "roi.json"), spec);

    DatasetSplit split{{"a"}, {"b"}, {"c", "d"}, 42};
    save_split(split, dir / "split.json");
    EXPECT_EQ(load_split(dir / "split.json"), split);
}
