#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acp/corpus.hpp"
#include "acp/detector/inference.hpp"
#include "acp/detector/trainer.hpp"
#include "acp/eval.hpp"
#include "acp/pipeline/config.hpp"

namespace acp::pipeline {

/// A stage input (manifest, split, ROI spec, checkpoint) is absent.
class MissingInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// synth: phantoms + manifest under the workspace (or the configured manifest's directory).
Manifest run_synth(const PipelineConfig& config);

struct PrepareResult {
    DatasetSplit split;
    RoiSpec roi_spec;
};

/// prepare: stratified split, then the ROI spec from train-split consensus
/// boxes (or roi.override). Writes both files.
PrepareResult run_prepare(const PipelineConfig& config);

/// Both ROI crops of every listed image, boxes from its consensus annotation.
std::vector<detector::TrainingSample> roi_samples(const Manifest& manifest, std::span<const std::string> ids,
                                                  const RoiSpec& spec);

struct TrainStageOptions {
    bool serial = false;
    int threads = 0;
    std::function<void(const detector::StepRecord&)> on_record;
};

/// train: augmented ROI crops of the train split, validation on the val
/// split, best-val checkpoint and loss curve CSV written to the configured paths.
detector::Checkpoint run_train(const PipelineConfig& config, const TrainStageOptions& options = {});

/// Loads the configured checkpoint; MissingInputError when the file is absent.
detector::Checkpoint load_stage_checkpoint(const PipelineConfig& config);

struct InferArtifacts {
    detector::ImageDetections detections;
    std::filesystem::path original, roi_left, roi_right, overlay, detections_json;
};

/// Resolves `image` as a manifest id, or else as a PNG path.
PanoramicImage resolve_image(const PipelineConfig& config, const std::string& image);

/// infer: original, both ROI crops, overlay (ROIs blue, detections red) and
/// detections JSON in `out_dir`.
InferArtifacts run_infer(const PipelineConfig& config, const detector::Network& net, const RoiSpec& spec,
                         const PanoramicImage& image, double threshold, const std::filesystem::path& out_dir);

struct EvalStageOptions {
    std::optional<double> threshold;  // default: config.eval.threshold
    bool serial = false;
    int threads = 0;
};

/// eval: detections on the test split reduced to image-level scores (or
/// per-ROI scores with eval.per_side); report JSON and ROC PNG written.
EvalReport run_eval(const PipelineConfig& config, const detector::Network& net, const EvalStageOptions& options = {});

/// Positive images (or crops) with a detection at or above `threshold` that
/// overlaps a consensus box at IoU >= `min_iou`, over all positives.
std::optional<double> localization_rate(std::span<const detector::ImageDetections> detections,
                                        const Manifest& manifest, double threshold, double min_iou);

}  // namespace acp::pipeline
