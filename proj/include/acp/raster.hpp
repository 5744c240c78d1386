#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "acp/box.hpp"

namespace acp {

/// Single-channel image, row-major, intensities normalized to [0, 1].
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, float fill = 0.0f);
    Raster(int width, int height, std::vector<float> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    ImageDims dims() const { return {width_, height_}; }
    bool empty() const { return pixels_.empty(); }

    float& at(int x, int y) { return pixels_[std::size_t(y) * width_ + x]; }
    float at(int x, int y) const { return pixels_[std::size_t(y) * width_ + x]; }

    std::span<float> pixels() { return pixels_; }
    std::span<const float> pixels() const { return pixels_; }

    /// Bilinear sample at continuous position (x, y) in pixel-center
    /// coordinates (pixel (i, j) has its center at (j, i)). Returns `fill`
    /// outside the sampled support.
    float sample_bilinear(double x, double y, float fill = 0.0f) const;

    /// Copy of the integer rectangle [x0, x0+w) x [y0, y0+h); must lie inside.
    Raster crop(int x0, int y0, int w, int h) const;

    /// Clamps every pixel into [0, 1].
    void clamp_unit();

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> pixels_;
};

}  // namespace acp
