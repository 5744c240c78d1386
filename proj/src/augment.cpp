#include "acp/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace acp {

void AugmentConfig::validate() const {
    if (brightness_range.first > brightness_range.second) {
        throw std::invalid_argument("augment.brightness_range is inverted");
    }
    if (angle_range.first > angle_range.second) throw std::invalid_argument("augment.angle_range is inverted");
    if (per_sample_count < 0) throw std::invalid_argument("augment.per_sample_count must be >= 0");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
        throw std::invalid_argument("augment.flip_probability must be in [0, 1]");
    }
}

Raster apply_brightness(const Raster& raster, double delta) {
    Raster out = raster;
    const float d = float(delta);
    for (auto& p : out.pixels()) p = std::clamp(p + d, 0.0f, 1.0f);
    return out;
}

std::pair<Raster, std::vector<BoundingBox>> apply_hflip(const Raster& raster,
                                                        std::span<const BoundingBox> boxes) {
    const int w = raster.width();
    Raster out(w, raster.height());
    for (int y = 0; y < raster.height(); ++y) {
        for (int x = 0; x < w; ++x) out.at(w - 1 - x, y) = raster.at(x, y);
    }
    std::vector<BoundingBox> flipped;
    flipped.reserve(boxes.size());
    for (const auto& b : boxes) flipped.push_back({w - b.x_max, b.y_min, w - b.x_min, b.y_max});
    return {std::move(out), std::move(flipped)};
}

std::pair<double, double> rotate_point(double x, double y, double angle_deg, const ImageDims& dims) {
    const double a = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    const double cx = 0.5 * dims.width, cy = 0.5 * dims.height;
    const double dx = x - cx, dy = y - cy;
    return {cx + c * dx - s * dy, cy + s * dx + c * dy};
}

BoundingBox rotated_envelope(const BoundingBox& box, double angle_deg, const ImageDims& dims) {
    const std::array<std::pair<double, double>, 4> corners{{{box.x_min, box.y_min},
                                                            {box.x_max, box.y_min},
                                                            {box.x_min, box.y_max},
                                                            {box.x_max, box.y_max}}};
    BoundingBox env{INFINITY, INFINITY, -INFINITY, -INFINITY};
    for (const auto& [x, y] : corners) {
        const auto [rx, ry] = rotate_point(x, y, angle_deg, dims);
        env.x_min = std::min(env.x_min, rx);
        env.y_min = std::min(env.y_min, ry);
        env.x_max = std::max(env.x_max, rx);
        env.y_max = std::max(env.y_max, ry);
    }
    return env;
}

std::pair<Raster, std::vector<BoundingBox>> apply_rotation(const Raster& raster,
                                                           std::span<const BoundingBox> boxes,
                                                           double angle_deg) {
    if (angle_deg == 0.0) return {raster, std::vector<BoundingBox>(boxes.begin(), boxes.end())};

    const ImageDims dims = raster.dims();
    const double a = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    const double cx = 0.5 * dims.width, cy = 0.5 * dims.height;

    Raster out(dims.width, dims.height);
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            // Inverse-map the output pixel center.
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            const double sx = cx + c * dx + s * dy;
            const double sy = cy - s * dx + c * dy;
            out.at(x, y) = raster.sample_bilinear(sx - 0.5, sy - 0.5, 0.0f);
        }
    }

    std::vector<BoundingBox> kept;
    const BoundingBox frame = dims.frame();
    for (const auto& b : boxes) {
        const BoundingBox env = rotated_envelope(b, angle_deg, dims);
        const BoundingBox clamped = clip_to(env, frame);
        if (!clamped.valid() || clamped.area() < 0.5 * env.area()) continue;
        kept.push_back(clamped);
    }
    return {std::move(out), std::move(kept)};
}

std::vector<AugmentationOp> draw_ops(const AugmentConfig& config, std::uint64_t seed, std::size_t index) {
    if (index == 0) return {};
    std::mt19937_64 rng(derive_seed(seed, index));
    std::uniform_real_distribution<double> angle(config.angle_range.first, config.angle_range.second);
    std::uniform_real_distribution<double> delta(config.brightness_range.first,
                                                 config.brightness_range.second);
    std::bernoulli_distribution flip(config.flip_probability);

    std::vector<AugmentationOp> ops;
    ops.push_back(AugmentationOp::rotate(angle(rng)));
    if (flip(rng)) ops.push_back(AugmentationOp::hflip());
    ops.push_back(AugmentationOp::brightness(delta(rng)));
    return ops;
}

AugmentedSample augment_one(const std::string& source_id, const Raster& raster,
                            std::span<const BoundingBox> boxes, const AugmentConfig& config,
                            std::uint64_t seed, std::size_t index) {
    AugmentedSample sample{raster, std::vector<BoundingBox>(boxes.begin(), boxes.end()),
                           Provenance{source_id, draw_ops(config, seed, index), seed, index}};
    for (const auto& op : sample.provenance.ops) {
        switch (op.kind) {
            case AugmentKind::rotate:
                std::tie(sample.raster, sample.boxes) = apply_rotation(sample.raster, sample.boxes, op.angle_deg);
                break;
            case AugmentKind::hflip:
                std::tie(sample.raster, sample.boxes) = apply_hflip(sample.raster, sample.boxes);
                break;
            case AugmentKind::brightness:
                sample.raster = apply_brightness(sample.raster, op.brightness_delta);
                break;
        }
    }
    return sample;
}

std::vector<AugmentedSample> augment_plan(const std::string& source_id, const Raster& raster,
                                          std::span<const BoundingBox> boxes,
                                          const AugmentConfig& config, std::uint64_t seed,
                                          std::size_t count) {
    std::vector<AugmentedSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(augment_one(source_id, raster, boxes, config, seed, i));
    }
    return out;
}

}  // namespace acp
