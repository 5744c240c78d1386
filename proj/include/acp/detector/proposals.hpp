#pragma once

#include <span>
#include <vector>

#include "acp/detector/anchors.hpp"
#include "acp/detector/box_coder.hpp"
#include "acp/detector/config.hpp"
#include "acp/detector/nms.hpp"

namespace acp::detector {

struct RpnOutput;

using Proposal = ScoredBox;  // score is objectness in [0, 1]

/// Decode every anchor, clip to `frame`, drop non-finite outputs and boxes with a side under 1 px,
/// keep the top proposals_pre_nms by score, suppress at proposal_nms_iou and
/// return at most proposals_post_nms.
std::vector<Proposal> propose(std::span<const double> objectness, std::span<const BoxDeltas> deltas,
                              std::span<const Anchor> anchors, const BoundingBox& frame,
                              const DetectorConfig& config);

/// propose() on a forward pass: objectness logits pass through a sigmoid.
std::vector<Proposal> propose(const RpnOutput& rpn, std::span<const Anchor> anchors, const DetectorConfig& config);

double sigmoid(double x);

}  // namespace acp::detector
