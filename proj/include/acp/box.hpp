#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace acp {

/// Axis-aligned box in continuous pixel coordinates. Origin is the top-left
/// corner of the frame, y grows downward; pixel (i, j) covers [j, j+1) x [i, i+1).
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const;
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }

    /// x_min < x_max and y_min < y_max, all finite.
    bool valid() const;

    bool contains(const BoundingBox& other) const;

    BoundingBox translated(double dx, double dy) const {
        return {x_min + dx, y_min + dy, x_max + dx, y_max + dy};
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ImageDims {
    int width = 0;
    int height = 0;

    BoundingBox frame() const { return {0.0, 0.0, double(width), double(height)}; }
    friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws ValidationError naming `context` when the box is degenerate.
void validate_box(const BoundingBox& box, const std::string& context);

/// Area of the overlap, 0 when the boxes do not overlap.
double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Overlap rectangle, empty when the boxes only touch or are apart.
std::optional<BoundingBox> intersection(const BoundingBox& a, const BoundingBox& b);

/// |a ∩ b| / |a ∪ b|, in [0, 1]. Returns 0 when the union is empty.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Clamps every coordinate into `frame`. The result may be degenerate.
BoundingBox clip_to(const BoundingBox& box, const BoundingBox& frame);

/// Smallest box containing both.
BoundingBox envelope(const BoundingBox& a, const BoundingBox& b);

std::string to_string(const BoundingBox& box);

}  // namespace acp
