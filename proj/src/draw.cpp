#include "acp/draw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace acp {

RgbImage to_rgb(const Raster& raster) {
    RgbImage out(raster.width(), raster.height());
    for (int y = 0; y < raster.height(); ++y) {
        for (int x = 0; x < raster.width(); ++x) {
            const auto v = std::uint8_t(std::lround(std::clamp(raster.at(x, y), 0.0f, 1.0f) * 255.0f));
            const std::size_t i = (std::size_t(y) * std::size_t(raster.width()) + std::size_t(x)) * 3;
            out.data[i] = out.data[i + 1] = out.data[i + 2] = v;
        }
    }
    return out;
}

void put_pixel(RgbImage& image, int x, int y, Rgb color) {
    if (x < 0 || y < 0 || x >= image.width || y >= image.height) return;
    const std::size_t i = (std::size_t(y) * std::size_t(image.width) + std::size_t(x)) * 3;
    image.data[i] = color[0];
    image.data[i + 1] = color[1];
    image.data[i + 2] = color[2];
}

// Bresenham
void draw_line(RgbImage& image, int x0, int y0, int x1, int y1, Rgb color) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        put_pixel(image, x0, y0, color);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void draw_rect(RgbImage& image, const BoundingBox& box, Rgb color, int thickness) {
    const int x0 = int(std::floor(box.x_min));
    const int y0 = int(std::floor(box.y_min));
    const int x1 = int(std::ceil(box.x_max)) - 1;
    const int y1 = int(std::ceil(box.y_max)) - 1;
    for (int t = 0; t < thickness; ++t) {
        draw_line(image, x0 + t, y0 + t, x1 - t, y0 + t, color);
        draw_line(image, x0 + t, y1 - t, x1 - t, y1 - t, color);
        draw_line(image, x0 + t, y0 + t, x0 + t, y1 - t, color);
        draw_line(image, x1 - t, y0 + t, x1 - t, y1 - t, color);
    }
}

RgbImage plot_roc(std::span<const std::pair<double, double>> points, int size) {
    RgbImage img(size, size, 255);
    const int margin = size / 10;
    const int span = size - 2 * margin;
    auto to_px = [&](double fpr, double tpr) {
        return std::pair{margin + int(std::lround(fpr * span)), size - margin - int(std::lround(tpr * span))};
    };
    const auto [ox, oy] = to_px(0, 0);
    const auto [rx, ty] = to_px(1, 1);
    draw_line(img, ox, oy, rx, oy, kBlack);
    draw_line(img, ox, oy, ox, ty, kBlack);
    draw_line(img, rx, oy, rx, ty, kGray);
    draw_line(img, ox, ty, rx, ty, kGray);
    for (int k = 1; k < 10; ++k) {
        const auto [gx, gy] = to_px(k / 10.0, k / 10.0);
        draw_line(img, gx, oy, gx, oy + 4, kBlack);
        draw_line(img, ox - 4, gy, ox, gy, kBlack);
    }
    draw_line(img, ox, oy, rx, ty, kGray);
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto [ax, ay] = to_px(points[i - 1].first, points[i - 1].second);
        const auto [bx, by] = to_px(points[i].first, points[i].second);
        draw_line(img, ax, ay, bx, by, kBlue);
        draw_line(img, ax, ay - 1, bx, by - 1, kBlue);
    }
    return img;
}

}  // namespace acp
