#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acp/box.hpp"
#include "acp/raster.hpp"
#include "acp/seed.hpp"

namespace acp {

struct AugmentConfig {
    std::pair<double, double> brightness_range{-0.3, 0.3};
    std::pair<double, double> angle_range{-15.0, 15.0};  // degrees
    int per_sample_count = 200;
    double flip_probability = 0.5;

    /// Throws std::invalid_argument on inverted ranges or a probability outside [0, 1].
    void validate() const;
};

enum class AugmentKind { brightness, hflip, rotate };

struct AugmentationOp {
    AugmentKind kind = AugmentKind::brightness;
    double brightness_delta = 0.0;  // brightness only
    double angle_deg = 0.0;         // rotate only

    static AugmentationOp brightness(double delta) { return {AugmentKind::brightness, delta, 0.0}; }
    static AugmentationOp hflip() { return {AugmentKind::hflip, 0.0, 0.0}; }
    static AugmentationOp rotate(double angle) { return {AugmentKind::rotate, 0.0, angle}; }

    friend bool operator==(const AugmentationOp&, const AugmentationOp&) = default;
};

struct Provenance {
    std::string source_id;
    std::vector<AugmentationOp> ops;  // in application order
    std::uint64_t seed = 0;
    std::size_t index = 0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct AugmentedSample {
    Raster raster;
    std::vector<BoundingBox> boxes;
    Provenance provenance;

    friend bool operator==(const AugmentedSample&, const AugmentedSample&) = default;
};

/// out = clamp(in + delta, 0, 1) per pixel.
Raster apply_brightness(const Raster& raster, double delta);

/// Mirror about the vertical center line: pixel x -> W-1-x, box [x0,x1] -> [W-x1, W-x0].
std::pair<Raster, std::vector<BoundingBox>> apply_hflip(const Raster& raster,
                                                        std::span<const BoundingBox> boxes);

/// Maps a point through the rotation used by apply_rotation: about the frame
/// center (W/2, H/2), x' = cx + cos*dx - sin*dy, y' = cy + sin*dx + cos*dy.
std::pair<double, double> rotate_point(double x, double y, double angle_deg, const ImageDims& dims);

/// Axis-aligned envelope of the four rotated corners (not clamped).
BoundingBox rotated_envelope(const BoundingBox& box, double angle_deg, const ImageDims& dims);

/// Rotation about the raster center with bilinear resampling and zero fill;
/// canvas size is preserved. Boxes become the clamped envelope of their rotated
/// corners and are dropped when clamping removes more than half of the envelope.
std::pair<Raster, std::vector<BoundingBox>> apply_rotation(const Raster& raster,
                                                           std::span<const BoundingBox> boxes,
                                                           double angle_deg);

/// The ops drawn for sample `index`; index 0 is always the identity (no ops).
std::vector<AugmentationOp> draw_ops(const AugmentConfig& config, std::uint64_t seed, std::size_t index);

/// Sample `index` of the plan, computable independently of the others.
AugmentedSample augment_one(const std::string& source_id, const Raster& raster,
                            std::span<const BoundingBox> boxes, const AugmentConfig& config,
                            std::uint64_t seed, std::size_t index);

/// `count` samples: rotation, then optional flip, then brightness, each drawn
/// independently per index. Includes the identity sample first when count >= 1.
std::vector<AugmentedSample> augment_plan(const std::string& source_id, const Raster& raster,
                                          std::span<const BoundingBox> boxes,
                                          const AugmentConfig& config, std::uint64_t seed,
                                          std::size_t count);

}  // namespace acp
