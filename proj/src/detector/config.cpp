#include "acp/detector/config.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <type_traits>

namespace acp::detector {

using nlohmann::json;

const char* to_string(BackboneDepth depth) { return depth == BackboneDepth::deep ? "deep" : "small"; }

BackboneDepth parse_backbone_depth(const std::string& text) {
    if (text == "small") return BackboneDepth::small;
    if (text == "deep") return BackboneDepth::deep;
    throw std::invalid_argument("backbone_depth must be \"small\" or \"deep\", got \"" + text + "\"");
}

std::vector<int> DetectorConfig::residual_units() const {
    if (backbone_depth == BackboneDepth::deep) return {3, 4, 23, 3};
    return {0, 1, 1, 1};
}

DetectorConfig default_config(BackboneDepth depth) {
    DetectorConfig c;
    c.backbone_depth = depth;
    if (depth == BackboneDepth::deep) {
        c.backbone_channels = {64, 128, 256, 512};
        c.rpn_channels = 512;
        c.head_hidden = 1024;
    }
    return c;
}

void DetectorConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("detector config: ") + what);
    };
    require(backbone_channels.size() == 4, "backbone_channels needs 4 entries (one per stride-2 block)");
    for (int c : backbone_channels) require(c >= 1, "backbone_channels must be positive");
    require(feature_stride == 16, "feature_stride must be 16 (four stride-2 blocks)");
    require(!anchor_scales.empty() && !anchor_ratios.empty(), "anchor scales/ratios must be non-empty");
    for (double s : anchor_scales) require(s > 0 && std::isfinite(s), "anchor scales must be positive");
    for (double r : anchor_ratios) require(r > 0 && std::isfinite(r), "anchor ratios must be positive");
    require(rpn_channels >= 1 && head_hidden >= 1, "rpn_channels and head_hidden must be positive");
    require(roi_pool_size >= 1, "roi_pool_size must be >= 1");
    require(0 < rpn_neg_iou && rpn_neg_iou < rpn_pos_iou && rpn_pos_iou <= 1,
            "require 0 < rpn_neg_iou < rpn_pos_iou <= 1");
    require(proposal_nms_iou > 0 && proposal_nms_iou < 1, "proposal_nms_iou must be in (0,1)");
    require(final_nms_iou > 0 && final_nms_iou < 1, "final_nms_iou must be in (0,1)");
    require(proposals_pre_nms >= 1 && proposals_post_nms >= 1, "proposal counts must be >= 1");
    require(rpn_batch_size >= 1 && head_batch_size >= 1, "sampling batch sizes must be >= 1");
    require(rpn_positive_fraction > 0 && rpn_positive_fraction <= 1, "rpn_positive_fraction must be in (0,1]");
    require(head_positive_fraction > 0 && head_positive_fraction <= 1, "head_positive_fraction must be in (0,1]");
    require(head_fg_iou > 0 && head_fg_iou <= 1, "head_fg_iou must be in (0,1]");
    for (double s : head_box_std) require(s > 0, "head_box_std entries must be positive");
    require(smooth_l1_beta > 0, "smooth_l1_beta must be positive");
    require(loss_weights.rpn_cls >= 0 && loss_weights.rpn_reg >= 0 && loss_weights.head_cls >= 0 &&
                loss_weights.head_reg >= 0,
            "loss weights must be non-negative");
    require(learning_rate > 0 && momentum >= 0 && momentum < 1 && weight_decay >= 0,
            "optimizer settings out of range");
    require(warmup_iterations >= 0, "warmup_iterations must be >= 0");
    require(lr_decay_fraction > 0 && lr_decay_fraction <= 1, "lr_decay_fraction must be in (0,1]");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(iterations >= 0, "iterations must be >= 0");
    require(val_interval >= 1, "val_interval must be >= 1");
}

json to_json(const DetectorConfig& c) {
    return json{
        {"backbone_depth", to_string(c.backbone_depth)},
        {"backbone_channels", c.backbone_channels},
        {"anchor_scales", c.anchor_scales},
        {"anchor_ratios", c.anchor_ratios},
        {"feature_stride", c.feature_stride},
        {"rpn_channels", c.rpn_channels},
        {"roi_pool_size", c.roi_pool_size},
        {"head_hidden", c.head_hidden},
        {"rpn_pos_iou", c.rpn_pos_iou},
        {"rpn_neg_iou", c.rpn_neg_iou},
        {"rpn_batch_size", c.rpn_batch_size},
        {"rpn_positive_fraction", c.rpn_positive_fraction},
        {"proposal_nms_iou", c.proposal_nms_iou},
        {"final_nms_iou", c.final_nms_iou},
        {"proposals_pre_nms", c.proposals_pre_nms},
        {"proposals_post_nms", c.proposals_post_nms},
        {"head_batch_size", c.head_batch_size},
        {"head_positive_fraction", c.head_positive_fraction},
        {"head_fg_iou", c.head_fg_iou},
        {"head_box_std", c.head_box_std},
        {"smooth_l1_beta", c.smooth_l1_beta},
        {"loss_weights",
         {{"rpn_cls", c.loss_weights.rpn_cls},
          {"rpn_reg", c.loss_weights.rpn_reg},
          {"head_cls", c.loss_weights.head_cls},
          {"head_reg", c.loss_weights.head_reg}}},
        {"learning_rate", c.learning_rate},
        {"momentum", c.momentum},
        {"weight_decay", c.weight_decay},
        {"warmup_iterations", c.warmup_iterations},
        {"lr_decay_fraction", c.lr_decay_fraction},
        {"batch_size", c.batch_size},
        {"iterations", c.iterations},
        {"val_interval", c.val_interval},
        {"seed", c.seed},
    };
}

namespace {

void reject_unknown(const json& j, const json& known, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw std::invalid_argument("unknown key \"" + key + "\" in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& field) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        const bool ok = v.is_number_unsigned() ||
                        (v.is_number_integer() && (!std::is_unsigned_v<T> || v.get<std::int64_t>() >= 0));
        if (!ok) throw std::invalid_argument(std::string("detector config key \"") + key + "\" must be an integer");
    }
    try {
        field = v.get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("detector config key \"") + key + "\": " + e.what());
    }
}

}  // namespace

DetectorConfig detector_config_from_json(const json& j) {
    BackboneDepth depth = BackboneDepth::small;
    if (j.contains("backbone_depth")) depth = parse_backbone_depth(j.at("backbone_depth").get<std::string>());
    DetectorConfig c = default_config(depth);
    const json known = to_json(c);
    reject_unknown(j, known, "detector");

    read(j, "backbone_channels", c.backbone_channels);
    read(j, "anchor_scales", c.anchor_scales);
    read(j, "anchor_ratios", c.anchor_ratios);
    read(j, "feature_stride", c.feature_stride);
    read(j, "rpn_channels", c.rpn_channels);
    read(j, "roi_pool_size", c.roi_pool_size);
    read(j, "head_hidden", c.head_hidden);
    read(j, "rpn_pos_iou", c.rpn_pos_iou);
    read(j, "rpn_neg_iou", c.rpn_neg_iou);
    read(j, "rpn_batch_size", c.rpn_batch_size);
    read(j, "rpn_positive_fraction", c.rpn_positive_fraction);
    read(j, "proposal_nms_iou", c.proposal_nms_iou);
    read(j, "final_nms_iou", c.final_nms_iou);
    read(j, "proposals_pre_nms", c.proposals_pre_nms);
    read(j, "proposals_post_nms", c.proposals_post_nms);
    read(j, "head_batch_size", c.head_batch_size);
    read(j, "head_positive_fraction", c.head_positive_fraction);
    read(j, "head_fg_iou", c.head_fg_iou);
    read(j, "head_box_std", c.head_box_std);
    read(j, "smooth_l1_beta", c.smooth_l1_beta);
    if (j.contains("loss_weights")) {
        const json& w = j.at("loss_weights");
        reject_unknown(w, known.at("loss_weights"), "detector.loss_weights");
        read(w, "rpn_cls", c.loss_weights.rpn_cls);
        read(w, "rpn_reg", c.loss_weights.rpn_reg);
        read(w, "head_cls", c.loss_weights.head_cls);
        read(w, "head_reg", c.loss_weights.head_reg);
    }
    read(j, "learning_rate", c.learning_rate);
    read(j, "momentum", c.momentum);
    read(j, "weight_decay", c.weight_decay);
    read(j, "warmup_iterations", c.warmup_iterations);
    read(j, "lr_decay_fraction", c.lr_decay_fraction);
    read(j, "batch_size", c.batch_size);
    read(j, "iterations", c.iterations);
    read(j, "val_interval", c.val_interval);
    read(j, "seed", c.seed);
    c.validate();
    return c;
}

}  // namespace acp::detector
