#pragma once

#include <random>
#include <span>
#include <vector>

#include "acp/detector/anchors.hpp"
#include "acp/detector/box_coder.hpp"
#include "acp/detector/network.hpp"
#include "acp/detector/proposals.hpp"

namespace acp::detector {

struct LossBreakdown {
    double rpn_cls = 0.0;
    double rpn_reg = 0.0;
    double head_cls = 0.0;
    double head_reg = 0.0;
    double total = 0.0;

    LossBreakdown& operator+=(const LossBreakdown& o);
    LossBreakdown scaled(double f) const;
    bool finite() const;
};

double smooth_l1(double x, double beta);
double smooth_l1_grad(double x, double beta);

/// Sampled anchors with their binary labels and regression targets.
struct RpnTargets {
    std::vector<std::size_t> anchors;  // indices into the anchor list
    std::vector<int> labels;           // 1 = object, 0 = background
    std::vector<BoxDeltas> deltas;     // valid where label == 1
};

RpnTargets make_rpn_targets(std::span<const Anchor> anchors, std::span<const BoundingBox> gt,
                            const DetectorConfig& config, std::mt19937_64& rng);

/// Sampled second-stage ROIs with class labels and normalized regression targets.
struct HeadTargets {
    std::vector<BoundingBox> rois;
    std::vector<int> labels;
    std::vector<BoxDeltas> deltas;  // encode(roi, gt) / head_box_std, valid where label == 1
};

/// ROIs are the proposals plus the ground-truth boxes; foreground when the
/// best IoU with a gt box is >= head_fg_iou.
HeadTargets make_head_targets(std::span<const Proposal> proposals, std::span<const BoundingBox> gt,
                              const DetectorConfig& config, std::mt19937_64& rng);

/// Binary cross-entropy on sampled anchors (mean) and smooth-L1 over positive
/// anchors (sum / sampled count). Writes d(loss)/d(output) when `grads` is set.
std::pair<double, double> rpn_loss(const RpnOutput& rpn, const RpnTargets& targets, const DetectorConfig& config,
                                   OutputGradients* grads, double cls_weight = 1.0, double reg_weight = 1.0);

/// Softmax cross-entropy over the two classes (mean) and smooth-L1 over
/// foreground ROIs (sum / sampled count).
std::pair<double, double> head_loss(const HeadOutput& head, const HeadTargets& targets,
                                    const DetectorConfig& config, OutputGradients* grads,
                                    double cls_weight = 1.0, double reg_weight = 1.0);

/// Weighted sum of the four terms; gradients are those of `total`.
LossBreakdown compute_losses(const RpnOutput& rpn, const HeadOutput& head, const RpnTargets& rpn_targets,
                             const HeadTargets& head_targets, const DetectorConfig& config,
                             OutputGradients* grads);

}  // namespace acp::detector
