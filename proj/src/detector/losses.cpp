#include "acp/detector/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace acp::detector {

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
    rpn_cls += o.rpn_cls;
    rpn_reg += o.rpn_reg;
    head_cls += o.head_cls;
    head_reg += o.head_reg;
    total += o.total;
    return *this;
}

LossBreakdown LossBreakdown::scaled(double f) const {
    return {rpn_cls * f, rpn_reg * f, head_cls * f, head_reg * f, total * f};
}

bool LossBreakdown::finite() const {
    return std::isfinite(rpn_cls) && std::isfinite(rpn_reg) && std::isfinite(head_cls) &&
           std::isfinite(head_reg) && std::isfinite(total);
}

double smooth_l1(double x, double beta) {
    const double a = std::abs(x);
    return a < beta ? 0.5 * x * x / beta : a - 0.5 * beta;
}

double smooth_l1_grad(double x, double beta) {
    if (std::abs(x) < beta) return x / beta;
    return x > 0 ? 1.0 : -1.0;
}

RpnTargets make_rpn_targets(std::span<const Anchor> anchors, std::span<const BoundingBox> gt,
                            const DetectorConfig& config, std::mt19937_64& rng) {
    const AnchorAssignment assignment = assign_anchor_labels(anchors, gt, config);
    RpnTargets t;
    t.anchors = sample_labeled(assignment.labels, config.rpn_batch_size, config.rpn_positive_fraction, rng);
    for (std::size_t idx : t.anchors) {
        const bool pos = assignment.labels[idx] == AnchorLabel::positive;
        t.labels.push_back(pos ? 1 : 0);
        t.deltas.push_back(pos ? encode_box(anchors[idx].box, gt[std::size_t(assignment.matched_gt[idx])])
                               : BoxDeltas{});
    }
    return t;
}

HeadTargets make_head_targets(std::span<const Proposal> proposals, std::span<const BoundingBox> gt,
                              const DetectorConfig& config, std::mt19937_64& rng) {
    std::vector<BoundingBox> candidates;
    for (const auto& p : proposals) candidates.push_back(p.box);
    candidates.insert(candidates.end(), gt.begin(), gt.end());

    std::vector<AnchorLabel> labels(candidates.size(), AnchorLabel::negative);
    std::vector<int> matched(candidates.size(), -1);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double best = 0.0;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            const double o = iou(candidates[i], gt[g]);
            if (o > best) {
                best = o;
                matched[i] = int(g);
            }
        }
        if (best >= config.head_fg_iou) labels[i] = AnchorLabel::positive;
    }
    const auto picked = sample_labeled(labels, config.head_batch_size, config.head_positive_fraction, rng);
    HeadTargets t;
    for (std::size_t idx : picked) {
        const bool fg = labels[idx] == AnchorLabel::positive;
        t.rois.push_back(candidates[idx]);
        t.labels.push_back(fg ? 1 : 0);
        BoxDeltas d{};
        if (fg) {
            d = encode_box(candidates[idx], gt[std::size_t(matched[idx])]);
            for (std::size_t k = 0; k < 4; ++k) d[k] /= config.head_box_std[k];
        }
        t.deltas.push_back(d);
    }
    return t;
}

std::pair<double, double> rpn_loss(const RpnOutput& rpn, const RpnTargets& targets, const DetectorConfig& config,
                                   OutputGradients* grads, double cls_weight, double reg_weight) {
    const std::size_t a_per_cell = config.anchors_per_cell();
    if (grads) {
        grads->objectness.assign(rpn.objectness.data.size(), 0.0);
        grads->deltas.assign(rpn.deltas.data.size(), 0.0);
    }
    const std::size_t n = targets.anchors.size();
    if (n == 0) return {0.0, 0.0};
    const double norm = 1.0 / double(n);
    const std::size_t plane = rpn.objectness.plane();

    double cls = 0.0, reg = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t idx = targets.anchors[s];
        const std::size_t cell = idx / a_per_cell, kind = idx % a_per_cell;
        const double logit = rpn.objectness.data[kind * plane + cell];
        const double y = targets.labels[s];
        // log(1 + e^x) - y x, evaluated stably
        cls += std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit))) - y * logit;
        if (grads) grads->objectness[kind * plane + cell] += cls_weight * norm * (sigmoid(logit) - y);
        if (targets.labels[s] != 1) continue;
        for (std::size_t k = 0; k < 4; ++k) {
            const std::size_t off = (4 * kind + k) * plane + cell;
            const double diff = rpn.deltas.data[off] - targets.deltas[s][k];
            reg += smooth_l1(diff, config.smooth_l1_beta);
            if (grads) grads->deltas[off] += reg_weight * norm * smooth_l1_grad(diff, config.smooth_l1_beta);
        }
    }
    return {cls * norm, reg * norm};
}

std::pair<double, double> head_loss(const HeadOutput& head, const HeadTargets& targets,
                                    const DetectorConfig& config, OutputGradients* grads,
                                    double cls_weight, double reg_weight) {
    const std::size_t n = head.size();
    if (grads) {
        grads->class_logits.assign(n * 2, 0.0);
        grads->box_deltas.assign(n * 4, 0.0);
    }
    if (n == 0) return {0.0, 0.0};
    if (targets.labels.size() != n) throw std::invalid_argument("head_loss: targets do not match ROIs");
    const double norm = 1.0 / double(n);
    double cls = 0.0, reg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double l0 = head.class_logits[2 * i], l1 = head.class_logits[2 * i + 1];
        const double m = std::max(l0, l1);
        const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
        const int y = targets.labels[i];
        cls += lse - (y == 1 ? l1 : l0);
        if (grads) {
            const double p1 = std::exp(l1 - lse), p0 = std::exp(l0 - lse);
            grads->class_logits[2 * i] += cls_weight * norm * (p0 - (y == 0 ? 1.0 : 0.0));
            grads->class_logits[2 * i + 1] += cls_weight * norm * (p1 - (y == 1 ? 1.0 : 0.0));
        }
        if (y != 1) continue;
        for (std::size_t k = 0; k < 4; ++k) {
            const double diff = head.box_deltas[4 * i + k] - targets.deltas[i][k];
            reg += smooth_l1(diff, config.smooth_l1_beta);
            if (grads) grads->box_deltas[4 * i + k] += reg_weight * norm * smooth_l1_grad(diff, config.smooth_l1_beta);
        }
    }
    return {cls * norm, reg * norm};
}

LossBreakdown compute_losses(const RpnOutput& rpn, const HeadOutput& head, const RpnTargets& rpn_targets,
                             const HeadTargets& head_targets, const DetectorConfig& config,
                             OutputGradients* grads) {
    const auto& w = config.loss_weights;
    LossBreakdown l;
    std::tie(l.rpn_cls, l.rpn_reg) = rpn_loss(rpn, rpn_targets, config, grads, w.rpn_cls, w.rpn_reg);
    std::tie(l.head_cls, l.head_reg) = head_loss(head, head_targets, config, grads, w.head_cls, w.head_reg);
    l.total = w.rpn_cls * l.rpn_cls + w.rpn_reg * l.rpn_reg + w.head_cls * l.head_cls + w.head_reg * l.head_reg;
    return l;
}

}  // namespace acp::detector
