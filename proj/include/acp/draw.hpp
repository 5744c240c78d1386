#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "acp/box.hpp"
#include "acp/png_io.hpp"
#include "acp/raster.hpp"

namespace acp {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kRed{220, 30, 30};
inline constexpr Rgb kGreen{30, 180, 60};
inline constexpr Rgb kBlue{40, 90, 220};
inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kGray{160, 160, 160};

RgbImage to_rgb(const Raster& raster);

void put_pixel(RgbImage& image, int x, int y, Rgb color);
void draw_line(RgbImage& image, int x0, int y0, int x1, int y1, Rgb color);
void draw_rect(RgbImage& image, const BoundingBox& box, Rgb color, int thickness = 1);

/// Renders an ROC curve (points as (fpr, tpr) pairs) with axes and chance diagonal.
RgbImage plot_roc(std::span<const std::pair<double, double>> points, int size = 400);

}  // namespace acp
