#include "acp/detector/anchors.hpp"

#include <algorithm>
#include <cmath>

namespace acp::detector {

std::vector<Anchor> generate_anchors(const FeatureDims& dims, const DetectorConfig& config) {
    if (dims.height < 1 || dims.width < 1) throw std::invalid_argument("feature map must be at least 1x1");
    std::vector<BoundingBox> shapes;  // centered at the origin
    for (double s : config.anchor_scales) {
        for (double r : config.anchor_ratios) {
            const double w = s / std::sqrt(r), h = s * std::sqrt(r);
            shapes.push_back({-0.5 * w, -0.5 * h, 0.5 * w, 0.5 * h});
        }
    }
    std::vector<Anchor> anchors;
    anchors.reserve(dims.cells() * shapes.size());
    const double stride = config.feature_stride;
    for (int row = 0; row < dims.height; ++row) {
        for (int col = 0; col < dims.width; ++col) {
            const double cx = (col + 0.5) * stride, cy = (row + 0.5) * stride;
            for (std::size_t k = 0; k < shapes.size(); ++k) {
                anchors.push_back({shapes[k].translated(cx, cy), row, col, int(k)});
            }
        }
    }
    return anchors;
}

AnchorAssignment assign_anchor_labels(std::span<const Anchor> anchors, std::span<const BoundingBox> gt,
                                      const DetectorConfig& config) {
    const std::size_t n = anchors.size();
    AnchorAssignment out{std::vector<AnchorLabel>(n, AnchorLabel::negative), std::vector<int>(n, -1),
                         std::vector<double>(n, 0.0)};
    if (gt.empty()) return out;

    std::vector<double> gt_best(gt.size(), 0.0);
    std::vector<double> overlaps(n * gt.size());
    for (std::size_t a = 0; a < n; ++a) {
        double best = -1.0;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            const double o = iou(anchors[a].box, gt[g]);
            overlaps[a * gt.size() + g] = o;
            if (o > best) {
                best = o;
                out.matched_gt[a] = int(g);
            }
            gt_best[g] = std::max(gt_best[g], o);
        }
        out.max_iou[a] = best;
    }
    for (std::size_t a = 0; a < n; ++a) {
        const double m = out.max_iou[a];
        if (m >= config.rpn_pos_iou) {
            out.labels[a] = AnchorLabel::positive;
        } else if (m < config.rpn_neg_iou) {
            out.labels[a] = AnchorLabel::negative;
        } else {
            out.labels[a] = AnchorLabel::ignore;
        }
    }
    // Every gt keeps the anchors that match it best, even below rpn_pos_iou.
    for (std::size_t g = 0; g < gt.size(); ++g) {
        if (gt_best[g] <= 0.0) continue;
        for (std::size_t a = 0; a < n; ++a) {
            if (overlaps[a * gt.size() + g] == gt_best[g]) {
                out.labels[a] = AnchorLabel::positive;
                out.matched_gt[a] = int(g);
            }
        }
    }
    return out;
}

std::vector<std::size_t> sample_labeled(std::span<const AnchorLabel> labels, int batch,
                                        double positive_fraction, std::mt19937_64& rng) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == AnchorLabel::positive) pos.push_back(i);
        if (labels[i] == AnchorLabel::negative) neg.push_back(i);
    }
    const auto max_pos = std::size_t(std::floor(positive_fraction * batch));
    std::shuffle(pos.begin(), pos.end(), rng);
    if (pos.size() > max_pos) pos.resize(max_pos);
    const std::size_t max_neg = std::size_t(batch) - pos.size();
    std::shuffle(neg.begin(), neg.end(), rng);
    if (neg.size() > max_neg) neg.resize(max_neg);
    pos.insert(pos.end(), neg.begin(), neg.end());
    return pos;
}

}  // namespace acp::detector
