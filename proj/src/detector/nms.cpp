#include "acp/detector/nms.hpp"

#include <algorithm>
#include <numeric>

namespace acp::detector {

bool ranks_before(const ScoredBox& a, const ScoredBox& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.x_min != b.box.x_min) return a.box.x_min < b.box.x_min;
    return a.box.y_min < b.box.y_min;
}

std::vector<std::size_t> nms_indices(std::span<const ScoredBox> items, double iou_threshold) {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ranks_before(items[a], items[b]); });

    std::vector<std::size_t> kept;
    std::vector<char> suppressed(items.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t cur = order[i];
        if (suppressed[cur]) continue;
        kept.push_back(cur);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const std::size_t other = order[j];
            if (!suppressed[other] && iou(items[cur].box, items[other].box) > iou_threshold) {
                suppressed[other] = 1;
            }
        }
    }
    return kept;
}

std::vector<ScoredBox> nms(std::span<const ScoredBox> items, double iou_threshold) {
    std::vector<ScoredBox> out;
    for (std::size_t i : nms_indices(items, iou_threshold)) out.push_back(items[i]);
    return out;
}

}  // namespace acp::detector
