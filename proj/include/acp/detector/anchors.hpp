#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "acp/box.hpp"
#include "acp/detector/config.hpp"

namespace acp::detector {

struct FeatureDims {
    int height = 0;
    int width = 0;

    std::size_t cells() const { return std::size_t(height) * std::size_t(width); }
    friend bool operator==(const FeatureDims&, const FeatureDims&) = default;
};

struct Anchor {
    BoundingBox box;
    int row = 0;
    int col = 0;
    int kind = 0;  // scale_index * |ratios| + ratio_index
};

/// Anchors for every feature cell in (row, col, kind) order, centered at
/// ((col + 0.5) * stride, (row + 0.5) * stride). A ratio r = h/w at scale s
/// gives w = s / sqrt(r), h = s * sqrt(r). Anchors may extend past the frame.
std::vector<Anchor> generate_anchors(const FeatureDims& dims, const DetectorConfig& config);

enum class AnchorLabel : std::int8_t { negative = 0, positive = 1, ignore = -1 };

struct AnchorAssignment {
    std::vector<AnchorLabel> labels;
    std::vector<int> matched_gt;  // best-overlap gt index per anchor, -1 without gt
    std::vector<double> max_iou;
};

/// Positive when IoU >= rpn_pos_iou with some gt or the anchor attains a gt's
/// best (non-zero) IoU; negative when max IoU < rpn_neg_iou; ignore otherwise.
AnchorAssignment assign_anchor_labels(std::span<const Anchor> anchors, std::span<const BoundingBox> gt,
                                      const DetectorConfig& config);

/// Draws at most `batch` anchors, positives capped at `positive_fraction * batch`.
/// Returns anchor indices; positives first.
std::vector<std::size_t> sample_labeled(std::span<const AnchorLabel> labels, int batch,
                                        double positive_fraction, std::mt19937_64& rng);

}  // namespace acp::detector
