#include "acp/detector/inference.hpp"

#include <algorithm>

#include "acp/detector/anchors.hpp"
#include "acp/detector/box_coder.hpp"
#include "acp/detector/proposals.hpp"

namespace acp::detector {

std::vector<ScoredBox> detect(const Network& net, const Raster& crop, double min_score) {
    const DetectorConfig& config = net.config();
    const RpnOutput rpn = net.forward_rpn(crop, false);
    const auto anchors = generate_anchors(rpn.dims, config);
    const auto proposals = propose(rpn, anchors, config);
    std::vector<BoundingBox> rois;
    for (const auto& p : proposals) rois.push_back(p.box);
    const HeadOutput head = net.forward_head(rpn, std::move(rois), false);

    const BoundingBox frame{0.0, 0.0, double(crop.width()), double(crop.height())};
    std::vector<ScoredBox> candidates;
    for (std::size_t i = 0; i < head.size(); ++i) {
        BoxDeltas d;
        for (std::size_t k = 0; k < 4; ++k) d[k] = head.box_deltas[4 * i + k] * config.head_box_std[k];
        const BoundingBox box = decode_clipped(head.rois[i], d, frame);
        if (box.width() < 1.0 || box.height() < 1.0) continue;
        candidates.push_back({box, head.acp_probability(i)});
    }
    std::vector<ScoredBox> kept = nms(candidates, config.final_nms_iou);
    std::erase_if(kept, [&](const ScoredBox& b) { return b.score < min_score; });
    return kept;
}

ImageDetections detect_image(const Network& net, const PanoramicImage& image, const RoiSpec& spec,
                             double threshold) {
    ImageDetections out;
    out.image_id = image.id;
    const ImageDims dims{image.pixels.width(), image.pixels.height()};
    for (Side side : {Side::left, Side::right}) {
        const CropWindow window = crop_window(spec.rect(side), dims);
        out.windows[side == Side::left ? 0 : 1] = window;
        const Raster crop = image.pixels.crop(window.x0, window.y0, window.width, window.height);
        // The window is the ROI snapped outward to whole pixels; clip back to the ROI itself.
        const BoundingBox roi = clip_to(spec.rect(side), dims.frame());
        for (const auto& b : detect(net, crop, 0.0)) {
            const BoundingBox box = clip_to(window.to_panoramic(b.box), roi);
            if (!box.valid()) continue;
            out.image_score = std::max(out.image_score, b.score);
            if (b.score >= threshold) out.detections.push_back({box, b.score, side});
        }
    }
    std::stable_sort(out.detections.begin(), out.detections.end(),
                     [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    return out;
}

nlohmann::json to_json(const ImageDetections& d, double threshold) {
    nlohmann::json dets = nlohmann::json::array();
    for (const auto& det : d.detections) {
        nlohmann::json box;
        acp::to_json(box, det.box);
        dets.push_back({{"box", box}, {"confidence", det.confidence}, {"side", to_string(det.side)},
                        {"frame", "panoramic"}});
    }
    nlohmann::json rois = nlohmann::json::array();
    for (std::size_t i = 0; i < 2; ++i) {
        nlohmann::json rect;
        acp::to_json(rect, d.windows[i].rect());
        rois.push_back({{"side", i == 0 ? "left" : "right"}, {"rect", rect}});
    }
    return {{"image_id", d.image_id}, {"threshold", threshold}, {"image_score", d.image_score},
            {"rois", rois}, {"detections", dets}};
}

}  // namespace acp::detector
