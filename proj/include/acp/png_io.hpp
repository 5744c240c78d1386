#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "acp/raster.hpp"

namespace acp {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedPng {
    Raster raster;
    int bit_depth = 8;  // of the source file: 8 or 16
};

/// Reads a PNG as grayscale. 8-bit samples are scaled by 1/255, 16-bit by
/// 1/65535. Color inputs are converted to luminance.
LoadedPng read_png_gray(const std::filesystem::path& path);

/// Writes a grayscale PNG, quantizing [0,1] intensities to `bit_depth` (8 or 16).
void write_png_gray(const std::filesystem::path& path, const Raster& raster, int bit_depth = 8);

/// 8-bit RGB image used for overlays and plots.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major, 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 255)
        : width(w), height(h), data(std::size_t(w) * std::size_t(h) * 3, fill) {}
};

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);

/// Encodes a grayscale raster to PNG bytes in memory.
std::vector<std::uint8_t> encode_png_gray(const Raster& raster, int bit_depth = 8);

}  // namespace acp
