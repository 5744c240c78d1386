#include "acp/detector/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acp/detector/network.hpp"

namespace acp::detector {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<Proposal> propose(std::span<const double> objectness, std::span<const BoxDeltas> deltas,
                              std::span<const Anchor> anchors, const BoundingBox& frame,
                              const DetectorConfig& config) {
    if (objectness.size() != anchors.size() || deltas.size() != anchors.size()) {
        throw std::invalid_argument("propose: objectness/deltas/anchors size mismatch");
    }
    std::vector<Proposal> candidates;
    candidates.reserve(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        // Diverged outputs yield no proposals; the loss reports the failure.
        const auto& d = deltas[i];
        if (!std::isfinite(objectness[i]) || !std::all_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); })) {
            continue;
        }
        const BoundingBox b = decode_clipped(anchors[i].box, deltas[i], frame);
        if (b.width() < 1.0 || b.height() < 1.0) continue;
        candidates.push_back({b, std::clamp(objectness[i], 0.0, 1.0)});
    }
    std::stable_sort(candidates.begin(), candidates.end(), ranks_before);
    if (candidates.size() > std::size_t(config.proposals_pre_nms)) candidates.resize(std::size_t(config.proposals_pre_nms));
    std::vector<Proposal> kept = nms(candidates, config.proposal_nms_iou);
    if (kept.size() > std::size_t(config.proposals_post_nms)) kept.resize(std::size_t(config.proposals_post_nms));
    return kept;
}

std::vector<Proposal> propose(const RpnOutput& rpn, std::span<const Anchor> anchors, const DetectorConfig& config) {
    const std::size_t a = config.anchors_per_cell();
    std::vector<double> scores(anchors.size());
    std::vector<BoxDeltas> deltas(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        scores[i] = sigmoid(rpn.objectness_logit(i, a));
        deltas[i] = rpn.anchor_deltas(i, a);
    }
    const BoundingBox frame{0, 0, double(rpn.image_width), double(rpn.image_height)};
    return propose(scores, deltas, anchors, frame, config);
}

}  // namespace acp::detector
