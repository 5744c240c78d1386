#include "acp/detector/box_coder.hpp"

#include <algorithm>
#include <cmath>

namespace acp::detector {

BoxDeltas encode_box(const BoundingBox& reference, const BoundingBox& target) {
    const double wr = reference.width(), hr = reference.height();
    if (!(wr > 0 && hr > 0)) throw std::invalid_argument("encode_box: reference box has no area");
    if (!target.valid()) throw std::invalid_argument("encode_box: target box is degenerate");
    return {(target.center_x() - reference.center_x()) / wr, (target.center_y() - reference.center_y()) / hr,
            std::log(target.width() / wr), std::log(target.height() / hr)};
}

BoundingBox decode_box(const BoundingBox& reference, const BoxDeltas& d) {
    const double wr = reference.width(), hr = reference.height();
    const double cx = reference.center_x() + d[0] * wr;
    const double cy = reference.center_y() + d[1] * hr;
    const double w = wr * std::exp(d[2]);
    const double h = hr * std::exp(d[3]);
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h)) {
        throw DecodeError("decode_box: deltas produce a non-finite box");
    }
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

BoundingBox decode_clipped(const BoundingBox& reference, BoxDeltas deltas, const BoundingBox& frame) {
    deltas[2] = std::min(deltas[2], kMaxLogScale);
    deltas[3] = std::min(deltas[3], kMaxLogScale);
    return clip_to(decode_box(reference, deltas), frame);
}

}  // namespace acp::detector
