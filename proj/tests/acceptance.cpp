// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   acceptance [--only N[,N...]] [--keep DIR] [--report FILE]
//
// --keep runs the end-to-end workspace in DIR and leaves it there.
// --report also writes the result lines to FILE.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "acp/augment.hpp"
#include "acp/corpus.hpp"
#include "acp/detector/box_coder.hpp"
#include "acp/detector/nms.hpp"
#include "acp/detector/trainer.hpp"
#include "acp/eval.hpp"
#include "acp/pipeline/stages.hpp"
#include "acp/png_io.hpp"
#include "acp/synth.hpp"
#include "support.hpp"

using namespace acp;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kRoundTripRel = 1e-6;
constexpr double kAucTol = 1e-9;
constexpr double kEnvelopeSlack = 1e-9;
constexpr double kGeometrySeconds = 60;
constexpr double kOverfitSeconds = 600;
constexpr double kOverfitReduction = 0.90;
constexpr int kOverfitSteps = 500;
constexpr double kE2eSeconds = 1800;
constexpr double kE2eAuc = 0.9;
constexpr double kE2eLocalization = 0.70;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects failed checks for one criterion.
struct Check {
    std::vector<std::string> failures;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok && failures.size() < 5) failures.push_back(what);
    }
    void note(const std::string& s) { notes.push_back(s); }
};

// Independent IoU for the oracles below.
double oracle_iou(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = iw * ih;
    const double uni = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    return uni > 0 ? inter / uni : 0.0;
}

// Brute force greedy: rescan for the best live box, kill its overlaps, repeat.
std::vector<std::size_t> oracle_nms(const std::vector<detector::ScoredBox>& items, double thr) {
    std::vector<bool> alive(items.size(), true);
    std::vector<std::size_t> keep;
    for (;;) {
        std::size_t best = items.size();
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (!alive[i]) continue;
            if (best == items.size()) {
                best = i;
                continue;
            }
            const auto& a = items[i];
            const auto& b = items[best];
            const bool better = a.score != b.score       ? a.score > b.score
                                : a.box.x_min != b.box.x_min ? a.box.x_min < b.box.x_min
                                                             : a.box.y_min < b.box.y_min;
            if (better) best = i;
        }
        if (best == items.size()) return keep;
        keep.push_back(best);
        alive[best] = false;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (alive[i] && oracle_iou(items[best].box, items[i].box) > thr) alive[i] = false;
        }
    }
}

Check geometry() {
    Check c;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1);

    for (int i = 0; i < 10000; ++i) {
        const BoundingBox a = testing::random_box(rng), b = testing::random_box(rng);
        const double ab = iou(a, b), ba = iou(b, a);
        c.require(ab == ba, fmt::format("iou asymmetric: {} vs {}", ab, ba));
        c.require(ab >= 0.0 && ab <= 1.0, fmt::format("iou out of range: {}", ab));
        c.require(iou(a, a) == 1.0, "iou(a,a) != 1");
        c.require(std::abs(ab - oracle_iou(a, b)) <= 1e-12, "iou disagrees with the oracle");
    }

    std::uniform_real_distribution<double> thr_dist(0.1, 0.9);
    std::uniform_int_distribution<int> score_step(0, 20);  // coarse scores force ties
    std::size_t kept_total = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        std::vector<detector::ScoredBox> items;
        for (int k = 0; k < 50; ++k) items.push_back({testing::random_box(rng, 60, 5, 60), score_step(rng) / 20.0});
        const double thr = thr_dist(rng);
        const auto got = detector::nms_indices(items, thr);
        const auto want = oracle_nms(items, thr);
        kept_total += want.size();
        c.require(got == want, fmt::format("nms differs from the oracle on instance {}", inst));
    }
    c.note(fmt::format("nms 1000x50 exact, mean kept {:.1f}", double(kept_total) / 1000));

    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const BoundingBox ref = testing::random_box(rng, 500, 2, 300), tgt = testing::random_box(rng, 500, 2, 300);
        const BoundingBox back = detector::decode_box(ref, detector::encode_box(ref, tgt));
        const double scale = std::max({std::abs(tgt.x_min), std::abs(tgt.y_min), std::abs(tgt.x_max),
                                       std::abs(tgt.y_max), tgt.x_max - tgt.x_min, tgt.y_max - tgt.y_min});
        const double err = std::max({std::abs(back.x_min - tgt.x_min), std::abs(back.y_min - tgt.y_min),
                                     std::abs(back.x_max - tgt.x_max), std::abs(back.y_max - tgt.y_max)}) /
                           scale;
        worst = std::max(worst, err);
    }
    c.require(worst <= kRoundTripRel, fmt::format("round-trip rel error {:.3g}", worst));
    c.note(fmt::format("round-trip worst rel {:.2g}", worst));

    const double secs = seconds_since(t0);
    c.require(secs < kGeometrySeconds, fmt::format("took {:.1f}s", secs));
    c.note(fmt::format("{:.1f}s", secs));
    return c;
}

Raster random_raster(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Raster r(w, h);
    for (auto& p : r.pixels()) p = u(rng);
    return r;
}

Check augmentation() {
    Check c;
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> side(16, 96);
    for (int i = 0; i < 1000; ++i) {
        const int w = side(rng), h = side(rng);
        const Raster r = random_raster(rng, w, h);

        // Quarter-pixel box corners keep W - x exact.
        std::uniform_int_distribution<int> qx(0, 4 * w), qy(0, 4 * h);
        std::vector<BoundingBox> boxes;
        for (int k = 0; k < 3; ++k) {
            int x0 = qx(rng), x1 = qx(rng), y0 = qy(rng), y1 = qy(rng);
            if (x0 == x1 || y0 == y1) continue;
            boxes.push_back({std::min(x0, x1) / 4.0, std::min(y0, y1) / 4.0, std::max(x0, x1) / 4.0,
                             std::max(y0, y1) / 4.0});
        }
        const auto [once_r, once_b] = apply_hflip(r, boxes);
        const auto [twice_r, twice_b] = apply_hflip(once_r, once_b);
        c.require(twice_r == r && twice_b == boxes, fmt::format("hflip not an involution (case {})", i));
        for (int y = 0; y < h; ++y) c.require(once_r.at(0, y) == r.at(w - 1, y), "hflip column mismatch");

        std::uniform_real_distribution<double> delta(-1.5, 1.5);
        const double d = delta(rng);
        const Raster bright = apply_brightness(r, d);
        bool clamped = true, matches = true;
        for (std::size_t p = 0; p < r.pixels().size(); ++p) {
            const float v = bright.pixels()[p];
            clamped = clamped && v >= 0.0f && v <= 1.0f;
            matches = matches && std::abs(v - std::clamp(double(r.pixels()[p]) + d, 0.0, 1.0)) <= 1e-6;
        }
        c.require(clamped && matches, fmt::format("brightness {} not a clamped shift (case {})", d, i));
        AugmentConfig only_brightness;
        only_brightness.angle_range = {0.0, 0.0};
        only_brightness.flip_probability = 0.0;
        const auto sample = augment_one("s", r, boxes, only_brightness, rng(), 1);
        c.require(sample.boxes == boxes, "brightness moved boxes");

        std::uniform_real_distribution<double> angle(-180.0, 180.0);
        const ImageDims dims{w, h};
        for (const auto& b : boxes) {
            const double a = angle(rng);
            const BoundingBox env = rotated_envelope(b, a, dims);
            const double rad = a * std::acos(-1.0) / 180.0, cs = std::cos(rad), sn = std::sin(rad);
            const double cx = w / 2.0, cy = h / 2.0;
            for (const auto [x, y] : {std::pair{b.x_min, b.y_min}, std::pair{b.x_max, b.y_min},
                                      std::pair{b.x_min, b.y_max}, std::pair{b.x_max, b.y_max}}) {
                const double rx = cx + cs * (x - cx) - sn * (y - cy);
                const double ry = cy + sn * (x - cx) + cs * (y - cy);
                c.require(rx >= env.x_min - kEnvelopeSlack && rx <= env.x_max + kEnvelopeSlack &&
                              ry >= env.y_min - kEnvelopeSlack && ry <= env.y_max + kEnvelopeSlack,
                          fmt::format("rotated corner outside envelope (case {}, angle {})", i, a));
            }
        }

        if (i % 50 == 0) {
            const AugmentConfig cfg;
            const std::uint64_t seed = rng();
            const auto p1 = augment_plan("s", r, boxes, cfg, seed, 6);
            const auto p2 = augment_plan("s", r, boxes, cfg, seed, 6);
            c.require(p1 == p2, "plan not deterministic");
            c.require(augment_one("s", r, boxes, cfg, seed, 4) == p1[4], "plan entry not independent of the rest");
            c.require(augment_plan("s", r, boxes, cfg, seed + 1, 6) != p1, "seed has no effect on the plan");
        }
    }
    c.note("1000 cases");
    return c;
}

Check stats() {
    Check c;
    std::mt19937_64 rng(3);
    double worst = 0;
    for (int set = 0; set < 1000; ++set) {
        std::uniform_int_distribution<int> count(1, 40), level(0, 10);
        std::vector<ScoredImage> scored;
        const int np = count(rng), nn = count(rng);
        for (int i = 0; i < np + nn; ++i) scored.push_back({std::to_string(i), level(rng) / 10.0, i < np});
        std::shuffle(scored.begin(), scored.end(), rng);

        double wins = 0;
        for (const auto& p : scored)
            for (const auto& n : scored)
                if (p.label && !n.label) wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
        const auto roc = roc_curve(scored);
        worst = std::max(worst, std::abs(auc(roc) - wins / double(np * nn)));

        c.require(roc.front() == RocPoint(0.0, 0.0) && roc.back() == RocPoint(1.0, 1.0), "ROC endpoints");
        for (std::size_t k = 1; k < roc.size(); ++k) {
            c.require(roc[k].first >= roc[k - 1].first && roc[k].second >= roc[k - 1].second, "ROC not monotone");
        }
    }
    c.require(worst <= kAucTol, fmt::format("AUC vs Mann-Whitney max diff {:.3g}", worst));
    c.note(fmt::format("AUC vs Mann-Whitney max diff {:.2g}", worst));

    const Confusion conf = confusion_from_counts(6, 2, 8, 2);
    c.require(conf.sensitivity && std::abs(*conf.sensitivity - 0.75) <= 1e-12, "sensitivity != 0.75");
    c.require(conf.specificity && std::abs(*conf.specificity - 0.80) <= 1e-12, "specificity != 0.80");

    const AucInference chance = auc_inference(0.5, 20, 20);
    c.require(chance.p_value >= 0.999, fmt::format("p at AUC 0.5 = {}", chance.p_value));
    std::vector<ScoredImage> perfect;
    for (int i = 0; i < 20; ++i) perfect.push_back({std::to_string(i), i < 10 ? 0.9 : 0.1, i < 10});
    const EvalReport r = build_report(perfect, 0.5);
    c.require(r.auc == 1.0 && r.inference && r.inference->p_value < 0.05,
              fmt::format("perfect 10+10: auc {} p {}", r.auc, r.inference ? r.inference->p_value : -1.0));
    c.note(fmt::format("p(0.5)={:.3f} p(perfect 10+10)={:.2g}", chance.p_value, r.inference->p_value));
    return c;
}

std::vector<std::string> make_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("img{:04d}", i));
    return ids;
}

Check split() {
    Check c;
    {
        const auto ids = make_ids(65);
        auto labels = std::make_unique<bool[]>(65);
        for (int i = 0; i < 65; ++i) labels[i] = i < 44;  // prevalence 0.67
        const DatasetSplit s = split_dataset(ids, std::span<const bool>(labels.get(), 65), {0.7, 0.1, 0.2}, 0);
        c.require(s.train.size() == 45 && s.val.size() == 6 && s.test.size() == 14,
                  fmt::format("n=65 gave ({}, {}, {})", s.train.size(), s.val.size(), s.test.size()));
    }
    std::mt19937_64 rng(4);
    for (std::size_t n = 3; n <= 1000; ++n) {
        const auto ids = make_ids(n);
        auto labels = std::make_unique<bool[]>(n);
        std::size_t npos = 0;
        for (std::size_t i = 0; i < n; ++i) npos += labels[i] = rng() % 3 != 0;
        const std::span<const bool> has(labels.get(), n);
        const std::uint64_t seed = rng();
        const DatasetSplit a = split_dataset(ids, has, {0.7, 0.1, 0.2}, seed);
        c.require(a == split_dataset(ids, has, {0.7, 0.1, 0.2}, seed), fmt::format("n={} not deterministic", n));

        const auto n_train = std::size_t(std::floor(0.7 * double(n) + 1e-9));
        const auto n_val = std::size_t(std::floor(0.1 * double(n) + 1e-9));
        c.require(a.train.size() == n_train && a.val.size() == n_val && a.test.size() == n - n_train - n_val,
                  fmt::format("n={} sizes", n));
        std::set<std::string> seen;
        std::size_t listed = 0;
        for (const auto* part : {&a.train, &a.val, &a.test}) {
            listed += part->size();
            seen.insert(part->begin(), part->end());
        }
        c.require(listed == n && seen == std::set<std::string>(ids.begin(), ids.end()),
                  fmt::format("n={} not a disjoint cover", n));

        const double prevalence = double(npos) / double(n);
        for (const auto* part : {&a.train, &a.val, &a.test}) {
            std::size_t k = 0;
            for (const auto& id : *part) k += labels[std::stoul(id.substr(3))];
            c.require(std::abs(double(k) - prevalence * double(part->size())) <= 2.0,
                      fmt::format("n={} not stratified", n));
        }
    }
    c.note("n in [3,1000]");
    return c;
}

Check overfit() {
    Check c;
    // Four positive ROI crops, one per phantom.
    std::vector<detector::TrainingSample> samples;
    for (int i = 0; i < 4; ++i) {
        PhantomSpec spec;
        spec.has_acp = true;
        spec.n_acp_components = 1 + i % 3;
        spec.seed = 100 + i;
        const Phantom p = generate_phantom(spec);
        const ImageDims dims{spec.width, spec.height};
        const Side side = side_of(p.annotation.boxes[0], dims);
        RoiSpec roi;
        roi.left = spec.acp_region.rect(Side::left, dims);
        roi.right = spec.acp_region.rect(Side::right, dims);
        for (auto* r : {&roi.left, &roi.right}) {
            *r = clip_to({r->x_min - 25, r->y_min - 25, r->x_max + 25, r->y_max + 25}, dims.frame());
        }
        auto rois = extract_rois(p.image, roi, p.annotation);
        auto& crop = rois[side == Side::left ? 0 : 1];
        samples.push_back({crop.image_id, std::move(crop.raster), std::move(crop.boxes)});
    }

    detector::DetectorConfig cfg;
    cfg.iterations = kOverfitSteps;
    cfg.batch_size = 4;
    detector::TrainOptions opts;
    opts.serial = true;
    double at10 = NAN, last = NAN;
    int last_step = -1;
    opts.on_record = [&](const detector::StepRecord& r) {
        if (r.split != "train") return;
        if (r.step == 10) at10 = r.losses.total;
        last = r.losses.total;
        last_step = r.step;
    };
    const auto t0 = Clock::now();
    detector::train_detector(cfg, samples, {}, opts);
    const double secs = seconds_since(t0);
    const double reduction = 1.0 - last / at10;
    c.require(std::isfinite(reduction) && reduction >= kOverfitReduction,
              fmt::format("reduction {:.3f} (step 10 {:.4f}, step {} {:.4f})", reduction, at10, last_step, last));
    c.require(secs < kOverfitSeconds, fmt::format("took {:.0f}s", secs));
    c.note(fmt::format("step 10 loss {:.4f}, step {} loss {:.4f}, reduction {:.1f}%, {:.0f}s", at10, last_step, last,
                       100 * reduction, secs));
    return c;
}

struct E2eState {
    fs::path workspace;
    pipeline::PipelineConfig cfg;
    bool ready = false;
};

Check end_to_end(E2eState& st) {
    Check c;
    pipeline::PipelineConfig& cfg = st.cfg;
    cfg.paths.workspace = st.workspace;
    cfg.synth.n = 65;
    cfg.synth.prevalence = 0.67;
    cfg.validate();

    const auto t0 = Clock::now();
    const Manifest manifest = pipeline::run_synth(cfg);
    const pipeline::PrepareResult prep = pipeline::run_prepare(cfg);
    pipeline::TrainStageOptions topts;
    topts.serial = true;
    const detector::Checkpoint ckpt = pipeline::run_train(cfg, topts);
    const detector::Network net = ckpt.to_network();
    pipeline::EvalStageOptions eopts;
    eopts.serial = true;
    const EvalReport report = pipeline::run_eval(cfg, net, eopts);
    const double secs = seconds_since(t0);
    st.ready = true;

    c.require(prep.split.test.size() == 14, fmt::format("test split has {} images", prep.split.test.size()));
    c.require(report.scored.size() == 14, fmt::format("evaluated {} images", report.scored.size()));

    // Recount localization from fresh detections with the oracle IoU.
    std::size_t positives = 0, hits = 0;
    for (const auto& id : prep.split.test) {
        const Annotation* truth = manifest.consensus_for(id);
        if (!truth || !truth->has_acp()) continue;
        ++positives;
        const auto dets = detector::detect_image(net, load_image(*manifest.find_image(id)), prep.roi_spec,
                                                 cfg.eval.threshold);
        bool hit = false;
        for (const auto& d : dets.detections)
            for (const auto& gt : truth->boxes) hit = hit || oracle_iou(d.box, gt) >= 0.5;
        hits += hit;
    }
    const double loc = positives ? double(hits) / double(positives) : 0.0;
    c.require(report.localization_rate && std::abs(*report.localization_rate - loc) <= 1e-12,
              "report localization disagrees with the recount");

    c.require(report.auc >= kE2eAuc, fmt::format("AUC {:.3f}", report.auc));
    c.require(loc >= kE2eLocalization, fmt::format("localization {}/{}", hits, positives));
    c.require(secs < kE2eSeconds, fmt::format("took {:.0f}s", secs));
    c.note(fmt::format("AUC {:.3f}, localized {}/{} positives, best step {}, {:.0f}s", report.auc, hits, positives,
                       ckpt.metadata.best_step, secs));
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Check infer_artifacts(const E2eState& st) {
    Check c;
    if (!st.ready) {
        c.require(false, "end-to-end workspace unavailable");
        return c;
    }
    const Manifest m = load_manifest(st.cfg.paths.manifest_path());
    const DatasetSplit split = load_split(st.cfg.paths.split_path());
    const RoiSpec spec = load_roi_spec(st.cfg.paths.roi_spec_path());
    std::string id = split.test.front();
    for (const auto& t : split.test) {
        if (m.has_acp(t)) {
            id = t;
            break;
        }
    }
    const fs::path out = st.workspace / "acceptance_infer";
    const fs::path stdout_file = st.workspace / "infer_stdout.txt";
    const std::string cmd = fmt::format("\"{}\" infer --workspace \"{}\" --image {} --threshold 0 --out \"{}\" >\"{}\"",
                                        ACP_CLI, st.workspace.string(), id, out.string(), stdout_file.string());
    const int status = std::system(cmd.c_str());
    c.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "acp infer failed");
    if (!c.failures.empty()) return c;

    const json summary = json::parse(slurp(stdout_file));
    for (const char* key : {"original", "roi_left", "roi_right", "overlay", "detections_json"}) {
        c.require(fs::exists(summary.at(key).get<std::string>()), fmt::format("{} missing", key));
    }
    if (!c.failures.empty()) return c;

    const ImageRecord* rec = m.find_image(id);
    const LoadedPng original = read_png_gray(summary["original"].get<std::string>());
    const LoadedPng overlay = read_png_gray(summary["overlay"].get<std::string>());
    c.require(original.raster.width() == rec->width && original.raster.height() == rec->height, "original size");
    c.require(overlay.raster.width() == rec->width && overlay.raster.height() == rec->height, "overlay size");

    const json dj = json::parse(slurp(summary["detections_json"].get<std::string>()));
    c.require(dj["image_id"] == id, "detections image id");
    const std::array<BoundingBox, 2> rects{spec.left, spec.right};
    for (std::size_t s = 0; s < 2; ++s) {
        const LoadedPng crop = read_png_gray(summary[s == 0 ? "roi_left" : "roi_right"].get<std::string>());
        const BoundingBox window = dj["rois"][s]["rect"].get<BoundingBox>();
        c.require(crop.raster.width() == int(window.x_max - window.x_min) &&
                      crop.raster.height() == int(window.y_max - window.y_min),
                  "ROI crop size differs from its window");
    }
    std::size_t n = 0;
    for (const auto& d : dj["detections"]) {
        ++n;
        const BoundingBox b = d["box"].get<BoundingBox>();
        const BoundingBox& rect = rects[d["side"] == "left" ? 0 : 1];
        c.require(d["frame"] == "panoramic", "detection frame");
        c.require(b.x_min >= rect.x_min && b.y_min >= rect.y_min && b.x_max <= rect.x_max && b.y_max <= rect.y_max,
                  fmt::format("box {} outside the {} ROI {}", to_string(b), d["side"].get<std::string>(),
                              to_string(rect)));
    }
    c.require(n > 0, "no detections at threshold 0");
    c.note(fmt::format("{}: {} detections inside the ROI rects", id, n));
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    fs::path keep, report;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
        } else if (a == "--keep" && i + 1 < argc) {
            keep = argv[++i];
        } else if (a == "--report" && i + 1 < argc) {
            report = argv[++i];
        } else {
            std::fprintf(stderr, "usage: acceptance [--only N[,N...]] [--keep DIR] [--report FILE]\n");
            return 2;
        }
    }

    std::unique_ptr<testing::TempDir> tmp;
    E2eState e2e;
    if (keep.empty()) {
        tmp = std::make_unique<testing::TempDir>("acceptance");
        e2e.workspace = tmp->path();
    } else {
        e2e.workspace = fs::absolute(keep);
        fs::create_directories(e2e.workspace);
    }

    const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
        {"geometry: IoU, NMS vs greedy oracle, box coder round-trip", geometry},
        {"augmentation: hflip involution, brightness clamp, rotated envelope, plan determinism", augmentation},
        {"stats: AUC = Mann-Whitney, ROC shape, confusion, Hanley-McNeil p", stats},
        {"split: 65 -> (45, 6, 14); stratified deterministic cover for n in [3,1000]", split},
        {"overfit one batch: >= 90% loss reduction from step 10 within 500 steps", overfit},
        {"end-to-end: synth 65 -> prepare -> train -> eval, AUC >= 0.9, localization >= 70%",
         [&] { return end_to_end(e2e); }},
        {"infer: original, ROI crops, overlay, detections inside ROI rects",
         [&] {
             if (!e2e.ready && only.count(7) && !only.count(6) && fs::exists(e2e.workspace / "manifest.json")) {
                 e2e.cfg.paths.workspace = e2e.workspace;
                 e2e.ready = true;
             }
             return infer_artifacts(e2e);
         }},
    };

    std::ofstream report_out;
    if (!report.empty()) report_out.open(report);
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Check c;
        try {
            c = criteria[i].second();
        } catch (const std::exception& e) {
            c.require(false, std::string("exception: ") + e.what());
        }
        const bool ok = c.failures.empty();
        failed += !ok;
        std::string detail;
        for (const auto& s : ok ? c.notes : c.failures) detail += (detail.empty() ? "" : "; ") + s;
        const std::string line = fmt::format("{} [{}] {} ({})", ok ? "PASS" : "FAIL", id, criteria[i].first, detail);
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        if (report_out) report_out << line << std::endl;
    }
    return failed ? 1 : 0;
}
