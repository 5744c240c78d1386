#pragma once

#include <span>
#include <vector>

#include "acp/box.hpp"

namespace acp::detector {

struct ScoredBox {
    BoundingBox box;
    double score = 0.0;
};

/// Descending score, ties by smaller x_min, then smaller y_min.
bool ranks_before(const ScoredBox& a, const ScoredBox& b);

/// Greedy suppression: keep the best remaining item, drop every item whose IoU
/// with it exceeds `iou_threshold`. Output is in ranking order.
std::vector<ScoredBox> nms(std::span<const ScoredBox> items, double iou_threshold);

/// Same as nms but returns indices into `items`.
std::vector<std::size_t> nms_indices(std::span<const ScoredBox> items, double iou_threshold);

}  // namespace acp::detector
