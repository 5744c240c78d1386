#include "acp/box.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace acp {

double BoundingBox::area() const {
    return std::max(0.0, width()) * std::max(0.0, height());
}

bool BoundingBox::valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
           std::isfinite(y_max) && x_min < x_max && y_min < y_max;
}

bool BoundingBox::contains(const BoundingBox& other) const {
    return x_min <= other.x_min && y_min <= other.y_min && x_max >= other.x_max &&
           y_max >= other.y_max;
}

void validate_box(const BoundingBox& box, const std::string& context) {
    if (!box.valid()) {
        throw ValidationError(context + ": degenerate box " + to_string(box) +
                              " (requires x_min < x_max and y_min < y_max)");
    }
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

std::optional<BoundingBox> intersection(const BoundingBox& a, const BoundingBox& b) {
    BoundingBox r{std::max(a.x_min, b.x_min), std::max(a.y_min, b.y_min),
                  std::min(a.x_max, b.x_max), std::min(a.y_max, b.y_max)};
    if (!r.valid()) return std::nullopt;
    return r;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox clip_to(const BoundingBox& box, const BoundingBox& frame) {
    auto cx = [&](double v) { return std::clamp(v, frame.x_min, frame.x_max); };
    auto cy = [&](double v) { return std::clamp(v, frame.y_min, frame.y_max); };
    return {cx(box.x_min), cy(box.y_min), cx(box.x_max), cy(box.y_max)};
}

BoundingBox envelope(const BoundingBox& a, const BoundingBox& b) {
    return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min),
            std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max)};
}

std::string to_string(const BoundingBox& box) {
    std::ostringstream os;
    os << '[' << box.x_min << ',' << box.y_min << ',' << box.x_max << ',' << box.y_max << ']';
    return os.str();
}

}  // namespace acp
