#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace acp::detector {

enum class BackboneDepth { small, deep };

const char* to_string(BackboneDepth depth);
BackboneDepth parse_backbone_depth(const std::string& text);

struct LossWeights {
    double rpn_cls = 1.0;
    double rpn_reg = 1.0;
    double head_cls = 1.0;
    double head_reg = 1.0;
};

struct DetectorConfig {
    // Network shape
    BackboneDepth backbone_depth = BackboneDepth::small;
    std::vector<int> backbone_channels{16, 24, 32, 48};  // one entry per stride-2 block
    std::vector<double> anchor_scales{32.0, 64.0, 128.0};  // px
    std::vector<double> anchor_ratios{0.5, 1.0, 2.0};      // h / w
    int feature_stride = 16;
    int rpn_channels = 48;
    int roi_pool_size = 7;
    int head_hidden = 128;

    // Anchor and proposal selection
    double rpn_pos_iou = 0.7;
    double rpn_neg_iou = 0.3;
    int rpn_batch_size = 256;
    double rpn_positive_fraction = 0.5;
    double proposal_nms_iou = 0.7;
    double final_nms_iou = 0.3;
    int proposals_pre_nms = 300;
    int proposals_post_nms = 50;

    // Second-stage sampling
    int head_batch_size = 32;
    double head_positive_fraction = 0.25;
    double head_fg_iou = 0.5;
    std::array<double, 4> head_box_std{0.1, 0.1, 0.2, 0.2};

    // Losses
    double smooth_l1_beta = 1.0 / 9.0;
    LossWeights loss_weights;

    // Optimizer
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int warmup_iterations = 50;
    double lr_decay_fraction = 0.75;  // lr x0.1 after this fraction of the run
    int batch_size = 4;
    int iterations = 2000;
    int val_interval = 100;
    std::uint64_t seed = 0;

    /// Residual units following each stride-2 block's downsampling conv.
    std::vector<int> residual_units() const;
    std::size_t anchors_per_cell() const { return anchor_scales.size() * anchor_ratios.size(); }

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

/// Preset matching the depth: small = desk scale, deep = ResNet-101-like layout.
DetectorConfig default_config(BackboneDepth depth = BackboneDepth::small);

nlohmann::json to_json(const DetectorConfig& config);
/// Missing keys keep defaults; unknown keys are rejected.
DetectorConfig detector_config_from_json(const nlohmann::json& j);

}  // namespace acp::detector
