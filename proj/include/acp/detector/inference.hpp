#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "acp/corpus.hpp"
#include "acp/detector/network.hpp"
#include "acp/detector/nms.hpp"

namespace acp::detector {

/// Final detections for one crop, in crop coordinates, highest score first.
/// Every head output is decoded and clipped, suppressed at final_nms_iou, and
/// kept when its ACP probability is >= min_score.
std::vector<ScoredBox> detect(const Network& net, const Raster& crop, double min_score);

struct Detection {
    BoundingBox box;  // panoramic frame
    double confidence = 0.0;
    Side side = Side::left;
};

struct ImageDetections {
    std::string image_id;
    std::vector<Detection> detections;  // confidence >= threshold
    double image_score = 0.0;           // max confidence over all detections, thresholded or not
    std::array<CropWindow, 2> windows{};
};

/// Runs both ROI crops of `image` and maps the boxes back to the panoramic frame.
ImageDetections detect_image(const Network& net, const PanoramicImage& image, const RoiSpec& spec,
                             double threshold);

nlohmann::json to_json(const ImageDetections& d, double threshold);

}  // namespace acp::detector
