#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "acp/box.hpp"
#include "acp/raster.hpp"

namespace acp {

inline constexpr int kManifestVersion = 1;

class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SplitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class RoiError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Manifest entry: everything about an image except its pixels.
struct ImageRecord {
    std::string id;
    std::filesystem::path path;  // absolute after load_manifest
    std::string device_tag;
    int width = 0;
    int height = 0;

    ImageDims dims() const { return {width, height}; }
};

struct PanoramicImage {
    std::string id;
    Raster pixels;
    std::string device_tag;
    int bit_depth_source = 8;

    int width() const { return pixels.width(); }
    int height() const { return pixels.height(); }
};

struct Annotation {
    std::string image_id;
    std::vector<BoundingBox> boxes;  // empty means normal anatomy
    std::vector<std::string> annotator_ids;
    bool consensus = true;

    bool has_acp() const { return !boxes.empty(); }
};

struct Manifest {
    int version = kManifestVersion;
    std::vector<ImageRecord> images;
    std::vector<Annotation> annotations;

    const ImageRecord* find_image(const std::string& id) const;
    /// The consensus annotation for `image_id`, if any.
    const Annotation* consensus_for(const std::string& image_id) const;
    /// Image-level label from the consensus annotation; false when unannotated.
    bool has_acp(const std::string& image_id) const;
};

/// Reads and validates a manifest. Relative image paths resolve against the
/// manifest's directory. Pixels are not loaded.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest through a temporary file and rename. Image paths are
/// stored relative to the manifest directory when possible.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Throws ValidationError on duplicate ids, dangling annotations or bad boxes.
void validate_manifest(const Manifest& manifest);

PanoramicImage load_image(const ImageRecord& record);

struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::uint64_t seed = 0;

    friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct SplitFractions {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct SplitSizes {
    std::size_t train, val, test;
};

/// floor/floor/remainder sizing.
SplitSizes split_sizes(std::size_t n, const SplitFractions& fractions);

/// Seeded partition of `ids`. When `has_acp` is non-empty (same length as
/// `ids`) each split receives positives in proportion to the overall
/// prevalence, and at least one positive whenever the split is non-empty and
/// enough positives exist.
DatasetSplit split_dataset(std::span<const std::string> ids, std::span<const bool> has_acp,
                           const SplitFractions& fractions, std::uint64_t seed);

enum class Side { left, right };

const char* to_string(Side side);

struct RoiSpec {
    BoundingBox left;
    BoundingBox right;
    double margin_px = 25.0;
    std::vector<std::string> derived_from;

    const BoundingBox& rect(Side side) const { return side == Side::left ? left : right; }
    friend bool operator==(const RoiSpec&, const RoiSpec&) = default;
};

/// Side of the vertical midline the box center falls on.
Side side_of(const BoundingBox& box, const ImageDims& dims);

/// Per-side envelope of the consensus training boxes, grown by `margin_px`,
/// rounded outward to whole pixels, clamped to `frame`, and cut at the
/// vertical midline so the two sides never overlap.
RoiSpec compute_roi_spec(std::span<const Annotation> train_annotations, const ImageDims& frame,
                         double margin_px);

/// Integer crop rectangle of an ROI inside a concrete image.
struct CropWindow {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;

    BoundingBox rect() const { return {double(x0), double(y0), double(x0 + width), double(y0 + height)}; }
    BoundingBox to_panoramic(const BoundingBox& crop_box) const { return crop_box.translated(x0, y0); }
    BoundingBox to_crop(const BoundingBox& pano_box) const { return pano_box.translated(-x0, -y0); }
};

/// `rect` clamped to `dims` and snapped to whole pixels. Throws RoiError when
/// nothing of the ROI remains inside the image.
CropWindow crop_window(const BoundingBox& rect, const ImageDims& dims);

struct RoiSample {
    std::string image_id;
    Side side = Side::left;
    Raster raster;
    std::vector<BoundingBox> boxes;  // crop frame
    CropWindow window;                // inverse mapping to the panoramic frame
};

/// Minimum fraction of a box's own area that must fall inside an ROI for the
/// box to be kept in that crop.
inline constexpr double kMinInsideFraction = 0.5;

/// Crops the left and right ROIs. Boxes are clipped to the ROI and expressed in
/// crop coordinates; boxes with less than half their area inside are dropped.
std::array<RoiSample, 2> extract_rois(const PanoramicImage& image, const RoiSpec& spec,
                                      const Annotation& annotation);

/// Writes `text` to `path` through a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// JSON mapping
void to_json(nlohmann::json& j, const BoundingBox& b);
void from_json(const nlohmann::json& j, BoundingBox& b);
void to_json(nlohmann::json& j, const Annotation& a);
void from_json(const nlohmann::json& j, Annotation& a);
void to_json(nlohmann::json& j, const RoiSpec& s);
void from_json(const nlohmann::json& j, RoiSpec& s);
void to_json(nlohmann::json& j, const DatasetSplit& s);
void from_json(const nlohmann::json& j, DatasetSplit& s);

DatasetSplit load_split(const std::filesystem::path& path);
void save_split(const DatasetSplit& split, const std::filesystem::path& path);
RoiSpec load_roi_spec(const std::filesystem::path& path);
void save_roi_spec(const RoiSpec& spec, const std::filesystem::path& path);

}  // namespace acp
