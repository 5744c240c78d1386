#include "acp/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace acp {

Raster::Raster(int width, int height, float fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative raster size");
    pixels_.assign(std::size_t(width) * std::size_t(height), fill);
}

Raster::Raster(int width, int height, std::vector<float> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 || pixels_.size() != std::size_t(width) * std::size_t(height)) {
        throw std::invalid_argument("raster pixel count does not match " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
}

float Raster::sample_bilinear(double x, double y, float fill) const {
    if (!(x > -1.0 && y > -1.0 && x < width_ && y < height_)) return fill;
    const int x0 = int(std::floor(x));
    const int y0 = int(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    auto px = [&](int xi, int yi) -> double {
        if (xi < 0 || yi < 0 || xi >= width_ || yi >= height_) return fill;
        return at(xi, yi);
    };
    const double top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
    const double bottom = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
    return float(top * (1.0 - fy) + bottom * fy);
}

Raster Raster::crop(int x0, int y0, int w, int h) const {
    if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > width_ || y0 + h > height_) {
        throw std::out_of_range("crop rectangle outside raster");
    }
    Raster out(w, h);
    for (int y = 0; y < h; ++y) {
        const float* src = pixels_.data() + std::size_t(y0 + y) * width_ + x0;
        std::copy(src, src + w, out.pixels_.data() + std::size_t(y) * w);
    }
    return out;
}

void Raster::clamp_unit() {
    for (auto& p : pixels_) p = std::clamp(p, 0.0f, 1.0f);
}

}  // namespace acp
