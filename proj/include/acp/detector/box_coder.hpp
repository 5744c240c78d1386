#pragma once

#include <array>
#include <stdexcept>

#include "acp/box.hpp"

namespace acp::detector {

/// (tx, ty, tw, th): center offsets in units of the reference size, log size ratios.
using BoxDeltas = std::array<double, 4>;

/// Largest log-scale delta applied when decoding network output (1000/16 px growth).
inline constexpr double kMaxLogScale = 4.135166556742356;

class DecodeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// tx = (xc_gt - xc_ref) / w_ref, ty likewise, tw = ln(w_gt / w_ref), th likewise.
BoxDeltas encode_box(const BoundingBox& reference, const BoundingBox& target);

/// Exact inverse of encode_box; no clipping. Throws DecodeError when the
/// result is not finite.
BoundingBox decode_box(const BoundingBox& reference, const BoxDeltas& deltas);

/// Decode for network output: log-scale deltas clamped to kMaxLogScale, then
/// clipped to `frame`.
BoundingBox decode_clipped(const BoundingBox& reference, BoxDeltas deltas, const BoundingBox& frame);

}  // namespace acp::detector
