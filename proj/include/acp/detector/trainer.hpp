#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "acp/augment.hpp"
#include "acp/detector/checkpoint.hpp"
#include "acp/detector/losses.hpp"
#include "acp/detector/network.hpp"

namespace acp::detector {

/// One training input: an ROI crop and its boxes in crop coordinates.
struct TrainingSample {
    std::string id;
    Raster raster;
    std::vector<BoundingBox> boxes;
};

class NonFiniteLossError : public std::runtime_error {
public:
    NonFiniteLossError(int step, const std::string& what) : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

struct StepRecord {
    int step = 0;
    LossBreakdown losses;
    std::string split;  // "train" or "val"
};

struct TrainOptions {
    std::optional<AugmentConfig> augment;  // unset: train on the samples as given
    int threads = 0;                       // 0: hardware concurrency
    bool serial = false;                   // single thread; same numbers as the threaded run
    std::uint64_t split_seed = 0;          // recorded in checkpoint metadata
    std::function<void(const StepRecord&)> on_record;
};

struct TrainResult {
    Network network;  // best-validation weights, or the final ones without validation data
    CheckpointMetadata metadata;
    std::vector<StepRecord> curve;
};

/// Per-sample loss and parameter gradients for one forward/backward pass.
/// Anchor and ROI sampling draw from `rng`.
LossBreakdown sample_loss(const Network& net, const TrainingSample& sample, std::mt19937_64& rng,
                          Gradients* grads);

/// Mean loss over `samples` with fixed sampling seeds and no gradients. Head
/// targets come from the clipped anchors instead of the network's proposals.
LossBreakdown evaluate_loss(const Network& net, std::span<const TrainingSample> samples, std::uint64_t seed);

/// The weights training starts from for `config.seed`.
Network initial_network(const DetectorConfig& config);

double learning_rate_at(const DetectorConfig& config, int step);

/// SGD with momentum over `config.iterations` steps. Batch gradients are the
/// mean of per-sample gradients summed in a fixed order, so thread count does
/// not change the result. Throws NonFiniteLossError naming the step on a NaN or
/// infinite loss.
TrainResult train_detector(const DetectorConfig& config, std::span<const TrainingSample> train,
                           std::span<const TrainingSample> val, const TrainOptions& options);

/// Header line plus one row per record: step,rpn_cls,rpn_reg,head_cls,head_reg,total,split
std::string loss_curve_csv(std::span<const StepRecord> curve);

}  // namespace acp::detector
