#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "acp/corpus.hpp"

namespace acp {

/// Per-side neighborhood (the C3-C4 level of the neck) where ACP clusters are
/// planted, as fractions of the frame. The right region mirrors the left one.
struct AcpRegion {
    double x_min = 0.07;
    double y_min = 0.60;
    double x_max = 0.25;
    double y_max = 0.92;

    /// Pixel rectangle on `side`; throws std::invalid_argument when the
    /// region does not lie inside the frame.
    BoundingBox rect(Side side, const ImageDims& dims) const;
};

struct PhantomSpec {
    int width = 640;
    int height = 320;
    bool has_acp = false;
    int n_acp_components = 1;  // 1..3 when has_acp
    AcpRegion acp_region;
    double confuser_probability = 0.5;
    double noise_level = 0.3;
    int device = 0;  // 0 or 1: two acquisition profiles
    std::uint64_t seed = 0;
};

/// Planted intensity increment of an ACP cluster; pixels at or above this are
/// part of the lesion and lie inside its annotated box.
inline constexpr float kLesionThreshold = 0.05f;

struct Phantom {
    PanoramicImage image;
    Annotation annotation;
    Raster lesion_signal;  // planted increment per pixel, 0 outside lesions
    std::vector<BoundingBox> confusers;  // unannotated distractor extents
};

const char* device_tag(int device);

/// Builds one synthetic panoramic-like radiograph. Throws std::invalid_argument
/// on an invalid spec (including an ACP region outside the frame).
Phantom generate_phantom(const PhantomSpec& spec);

struct DatasetOptions {
    std::size_t n = 65;
    double prevalence = 0.67;
    std::uint64_t seed = 0;
    PhantomSpec base;  // geometry/noise template; has_acp, seed, device are drawn per item
};

/// Number of positive images: round(prevalence * n).
std::size_t positive_count(std::size_t n, double prevalence);

/// Writes n 16-bit PNG phantoms under out_dir/images plus out_dir/manifest.json.
Manifest generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir);

}  // namespace acp
