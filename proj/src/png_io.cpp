#include "acp/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace acp {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw ImageIoError(msg); }
void png_warning_fn(png_structp, png_const_charp) {}

std::uint16_t quantize(float v, int max_value) {
    const double c = std::clamp(double(v), 0.0, 1.0);
    return std::uint16_t(std::lround(c * max_value));
}

// Shared writer: `rows` supplies one row of packed samples at a time.
template <typename SinkSetup>
void write_png(SinkSetup&& setup_io, int width, int height, int bit_depth, int color_type,
               const std::vector<std::vector<std::uint8_t>>& rows) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                              png_warning_fn);
    if (!png) throw ImageIoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw ImageIoError("png_create_info_struct failed");
    }
    try {
        setup_io(png);
        png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth, color_type,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (const auto& row : rows) png_write_row(png, row.data());
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

std::vector<std::vector<std::uint8_t>> gray_rows(const Raster& raster, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw ImageIoError("bit depth must be 8 or 16");
    const int bytes = bit_depth / 8;
    std::vector<std::vector<std::uint8_t>> rows(std::size_t(raster.height()),
                                                std::vector<std::uint8_t>(std::size_t(raster.width()) * bytes));
    for (int y = 0; y < raster.height(); ++y) {
        auto& row = rows[std::size_t(y)];
        for (int x = 0; x < raster.width(); ++x) {
            if (bit_depth == 8) {
                row[std::size_t(x)] = std::uint8_t(quantize(raster.at(x, y), 255));
            } else {
                const std::uint16_t v = quantize(raster.at(x, y), 65535);
                row[std::size_t(x) * 2] = std::uint8_t(v >> 8);  // PNG is big-endian
                row[std::size_t(x) * 2 + 1] = std::uint8_t(v & 0xff);
            }
        }
    }
    return rows;
}

void write_to_buffer(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}
void flush_noop(png_structp) {}

}  // namespace

LoadedPng read_png_gray(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw ImageIoError("cannot open image " + path.string());

    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw ImageIoError("not a PNG file: " + path.string());
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                             png_warning_fn);
    if (!png) throw ImageIoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw ImageIoError("png_create_info_struct failed");
    }

    LoadedPng result;
    try {
        png_init_io(png, file.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);

        const int width = int(png_get_image_width(png, info));
        const int height = int(png_get_image_height(png, info));
        int bit_depth = png_get_bit_depth(png, info);
        const int color_type = png_get_color_type(png, info);

        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
            color_type == PNG_COLOR_TYPE_PALETTE) {
            png_set_rgb_to_gray_fixed(png, 1, -1, -1);
        }
        png_read_update_info(png, info);
        bit_depth = png_get_bit_depth(png, info);
        const std::size_t rowbytes = png_get_rowbytes(png, info);

        std::vector<std::uint8_t> buffer(rowbytes * std::size_t(height));
        std::vector<png_bytep> rows(static_cast<std::size_t>(height));
        for (int y = 0; y < height; ++y) rows[std::size_t(y)] = buffer.data() + rowbytes * std::size_t(y);
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);

        Raster raster(width, height);
        for (int y = 0; y < height; ++y) {
            const std::uint8_t* row = rows[std::size_t(y)];
            for (int x = 0; x < width; ++x) {
                if (bit_depth == 16) {
                    const unsigned v = (unsigned(row[2 * x]) << 8) | row[2 * x + 1];
                    raster.at(x, y) = float(v / 65535.0);
                } else {
                    raster.at(x, y) = float(row[x] / 255.0);
                }
            }
        }
        result.raster = std::move(raster);
        result.bit_depth = bit_depth == 16 ? 16 : 8;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return result;
}

void write_png_gray(const std::filesystem::path& path, const Raster& raster, int bit_depth) {
    const auto rows = gray_rows(raster, bit_depth);
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw ImageIoError("cannot write image " + path.string());
    write_png([&](png_structp png) { png_init_io(png, file.get()); }, raster.width(),
              raster.height(), bit_depth, PNG_COLOR_TYPE_GRAY, rows);
}

std::vector<std::uint8_t> encode_png_gray(const Raster& raster, int bit_depth) {
    const auto rows = gray_rows(raster, bit_depth);
    std::vector<std::uint8_t> out;
    write_png([&](png_structp png) { png_set_write_fn(png, &out, write_to_buffer, flush_noop); },
              raster.width(), raster.height(), bit_depth, PNG_COLOR_TYPE_GRAY, rows);
    return out;
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
    std::vector<std::vector<std::uint8_t>> rows(std::size_t(image.height));
    const std::size_t stride = std::size_t(image.width) * 3;
    for (int y = 0; y < image.height; ++y) {
        auto begin = image.data.begin() + std::ptrdiff_t(stride * std::size_t(y));
        rows[std::size_t(y)].assign(begin, begin + std::ptrdiff_t(stride));
    }
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw ImageIoError("cannot write image " + path.string());
    write_png([&](png_structp png) { png_init_io(png, file.get()); }, image.width, image.height, 8,
              PNG_COLOR_TYPE_RGB, rows);
}

}  // namespace acp
