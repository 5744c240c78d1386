#include "acp/pipeline/stages.hpp"

#include <algorithm>
#include <memory>
#include <thread>

#include "acp/draw.hpp"
#include "acp/png_io.hpp"
#include "acp/synth.hpp"

namespace acp::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Manifest load_stage_manifest(const PipelineConfig& config) {
    const fs::path path = config.paths.manifest_path();
    if (!fs::exists(path)) throw MissingInputError("manifest not found: " + path.string() + " (run synth first)");
    return load_manifest(path);
}

DatasetSplit load_stage_split(const PipelineConfig& config) {
    const fs::path path = config.paths.split_path();
    if (!fs::exists(path)) throw MissingInputError("split not found: " + path.string() + " (run prepare first)");
    return load_split(path);
}

RoiSpec load_stage_roi(const PipelineConfig& config) {
    if (config.roi.override_spec) return *config.roi.override_spec;
    const fs::path path = config.paths.roi_spec_path();
    if (!fs::exists(path)) throw MissingInputError("ROI spec not found: " + path.string() + " (run prepare first)");
    return load_roi_spec(path);
}

Annotation consensus_or_empty(const Manifest& manifest, const std::string& id) {
    if (const auto* a = manifest.consensus_for(id)) return *a;
    Annotation empty;
    empty.image_id = id;
    return empty;
}

int worker_count(bool serial, int threads) {
    if (serial) return 1;
    if (threads > 0) return threads;
    return int(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

Manifest run_synth(const PipelineConfig& config) {
    DatasetOptions opts;
    opts.n = config.synth.n;
    opts.prevalence = config.synth.prevalence;
    opts.seed = config.synth.seed;
    opts.base.width = config.synth.width;
    opts.base.height = config.synth.height;
    opts.base.noise_level = config.synth.noise_level;
    opts.base.confuser_probability = config.synth.confuser_probability;
    const fs::path manifest_path = config.paths.manifest_path();
    const fs::path dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
    Manifest m = generate_dataset(opts, dir);
    if (manifest_path.filename() != "manifest.json") save_manifest(m, manifest_path);
    return m;
}

PrepareResult run_prepare(const PipelineConfig& config) {
    const Manifest manifest = load_stage_manifest(config);
    const std::size_t n = manifest.images.size();
    std::vector<std::string> ids;
    auto has_acp = std::make_unique<bool[]>(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(manifest.images[i].id);
        has_acp[i] = manifest.has_acp(ids.back());
    }

    const auto& f = config.split.fractions;
    PrepareResult result;
    result.split = split_dataset(ids, std::span<const bool>(has_acp.get(), n), {f[0], f[1], f[2]},
                                 config.split.seed);

    if (config.roi.override_spec) {
        result.roi_spec = *config.roi.override_spec;
    } else {
        std::vector<Annotation> train_annotations;
        for (const auto& id : result.split.train) {
            if (const auto* a = manifest.consensus_for(id)) train_annotations.push_back(*a);
        }
        const ImageRecord* first = manifest.find_image(result.split.train.front());
        result.roi_spec = compute_roi_spec(train_annotations, {first->width, first->height}, config.roi.margin_px);
    }
    save_split(result.split, config.paths.split_path());
    save_roi_spec(result.roi_spec, config.paths.roi_spec_path());
    return result;
}

std::vector<detector::TrainingSample> roi_samples(const Manifest& manifest, std::span<const std::string> ids,
                                                  const RoiSpec& spec) {
    std::vector<detector::TrainingSample> out;
    for (const auto& id : ids) {
        const ImageRecord* rec = manifest.find_image(id);
        if (!rec) throw LoadError("split references unknown image id " + id);
        const PanoramicImage image = load_image(*rec);
        for (auto& roi : extract_rois(image, spec, consensus_or_empty(manifest, id))) {
            out.push_back({roi.image_id + ":" + to_string(roi.side), std::move(roi.raster), std::move(roi.boxes)});
        }
    }
    return out;
}

detector::Checkpoint run_train(const PipelineConfig& config, const TrainStageOptions& options) {
    const Manifest manifest = load_stage_manifest(config);
    const DatasetSplit split = load_stage_split(config);
    const RoiSpec spec = load_stage_roi(config);
    const auto train = roi_samples(manifest, split.train, spec);
    const auto val = roi_samples(manifest, split.val, spec);

    detector::TrainOptions topts;
    topts.augment = config.augment;
    topts.serial = options.serial;
    topts.threads = options.threads;
    topts.split_seed = split.seed;
    topts.on_record = options.on_record;
    detector::TrainResult result = detector::train_detector(config.detector, train, val, topts);

    detector::CheckpointMetadata meta = result.metadata;
    meta.created_at = detector::utc_timestamp();
    detector::Checkpoint ckpt = detector::Checkpoint::from_network(result.network, meta);
    detector::save_checkpoint(ckpt, config.paths.checkpoint_path());
    write_file_atomic(config.paths.loss_curve_path(), detector::loss_curve_csv(result.curve));
    return ckpt;
}

detector::Checkpoint load_stage_checkpoint(const PipelineConfig& config) {
    const fs::path path = config.paths.checkpoint_path();
    if (!fs::exists(path)) throw MissingInputError("no checkpoint at " + path.string() + " (run train first)");
    return detector::load_checkpoint(path);
}

PanoramicImage resolve_image(const PipelineConfig& config, const std::string& image) {
    const fs::path manifest_path = config.paths.manifest_path();
    if (fs::exists(manifest_path)) {
        const Manifest m = load_manifest(manifest_path);
        if (const ImageRecord* rec = m.find_image(image)) return load_image(*rec);
    }
    if (!fs::exists(image)) throw MissingInputError("image not found as manifest id or file: " + image);
    LoadedPng png = read_png_gray(image);
    return {fs::path(image).stem().string(), std::move(png.raster), "unknown", png.bit_depth};
}

InferArtifacts run_infer(const PipelineConfig& config, const detector::Network& net, const RoiSpec& spec,
                         const PanoramicImage& image, double threshold, const fs::path& out_dir) {
    (void)config;
    InferArtifacts out;
    out.detections = detector::detect_image(net, image, spec, threshold);
    fs::create_directories(out_dir);
    out.original = out_dir / "original.png";
    out.roi_left = out_dir / "roi_left.png";
    out.roi_right = out_dir / "roi_right.png";
    out.overlay = out_dir / "overlay.png";
    out.detections_json = out_dir / "detections.json";

    write_png_gray(out.original, image.pixels, image.bit_depth_source == 16 ? 16 : 8);
    const auto& windows = out.detections.windows;
    write_png_gray(out.roi_left, image.pixels.crop(windows[0].x0, windows[0].y0, windows[0].width, windows[0].height));
    write_png_gray(out.roi_right,
                   image.pixels.crop(windows[1].x0, windows[1].y0, windows[1].width, windows[1].height));

    RgbImage overlay = to_rgb(image.pixels);
    for (const auto& w : windows) draw_rect(overlay, w.rect(), kBlue, 1);
    for (const auto& d : out.detections.detections) draw_rect(overlay, d.box, kRed, 2);
    write_png_rgb(out.overlay, overlay);

    write_file_atomic(out.detections_json, detector::to_json(out.detections, threshold).dump(2) + "\n");
    return out;
}

std::optional<double> localization_rate(std::span<const detector::ImageDetections> detections,
                                        const Manifest& manifest, double threshold, double min_iou) {
    std::size_t positives = 0, hits = 0;
    for (const auto& d : detections) {
        const Annotation* a = manifest.consensus_for(d.image_id);
        if (!a || !a->has_acp()) continue;
        ++positives;
        bool hit = false;
        for (const auto& det : d.detections) {
            if (det.confidence < threshold) continue;
            for (const auto& gt : a->boxes) hit = hit || iou(det.box, gt) >= min_iou;
        }
        hits += hit;
    }
    if (positives == 0) return std::nullopt;
    return double(hits) / double(positives);
}

EvalReport run_eval(const PipelineConfig& config, const detector::Network& net, const EvalStageOptions& options) {
    const Manifest manifest = load_stage_manifest(config);
    const DatasetSplit split = load_stage_split(config);
    const RoiSpec spec = load_stage_roi(config);
    if (split.test.empty()) throw StatsError("test split is empty");
    const double threshold = options.threshold.value_or(config.eval.threshold);

    std::vector<detector::ImageDetections> all(split.test.size());
    std::vector<PanoramicImage> images;
    for (const auto& id : split.test) {
        const ImageRecord* rec = manifest.find_image(id);
        if (!rec) throw LoadError("split references unknown image id " + id);
        images.push_back(load_image(*rec));
    }
    const int workers = worker_count(options.serial, options.threads);
    const std::size_t n = images.size();
    auto body = [&](std::size_t w) {
        for (std::size_t i = w; i < n; i += std::size_t(workers)) {
            all[i] = detector::detect_image(net, images[i], spec, 0.0);
        }
    };
    if (workers <= 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(body, std::size_t(w));
        for (auto& t : pool) t.join();
    }

    std::vector<ScoredImage> scored;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = all[i];
        const Annotation truth = consensus_or_empty(manifest, d.image_id);
        if (!config.eval.per_side) {
            scored.push_back({d.image_id, d.image_score, truth.has_acp()});
            continue;
        }
        const ImageDims dims{images[i].pixels.width(), images[i].pixels.height()};
        for (Side side : {Side::left, Side::right}) {
            double score = 0.0;
            for (const auto& det : d.detections) {
                if (det.side == side) score = std::max(score, det.confidence);
            }
            bool label = false;
            for (const auto& b : truth.boxes) label = label || side_of(b, dims) == side;
            scored.push_back({d.image_id + ":" + to_string(side), score, label});
        }
    }
    // Detections were kept down to 0 so that image scores cover every head output;
    // the report's operating point applies `threshold`.
    EvalReport report = build_report(std::move(scored), threshold);
    report.localization_rate = localization_rate(all, manifest, threshold, config.eval.localization_iou);

    json j = to_json(report);
    j["checkpoint"] = config.paths.checkpoint_path().string();
    j["split_seed"] = split.seed;
    j["per_side"] = config.eval.per_side;
    write_file_atomic(config.paths.report_path(), j.dump(2) + "\n");
    write_png_rgb(config.paths.roc_plot_path(), plot_roc(report.roc_points));
    return report;
}

}  // namespace acp::pipeline
