#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "acp/detector/anchors.hpp"
#include "acp/detector/config.hpp"
#include "acp/detector/layers.hpp"
#include "acp/raster.hpp"

namespace acp::detector {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Backbone activations kept for the backward pass.
struct BackboneCache {
    struct Unit {
        ConvCache first, second;
        Tensor mid;  // after the inner ReLU
        Tensor out;  // after the closing ReLU
    };
    struct Block {
        ConvCache down;
        Tensor down_out;
        std::vector<Unit> units;
    };
    std::vector<Block> blocks;
};

/// First-stage output for one raster.
struct RpnOutput {
    Tensor features;    // C x Hf x Wf backbone output
    Tensor objectness;  // A x Hf x Wf logits
    Tensor deltas;      // 4A x Hf x Wf, channel 4a+k holds coordinate k of anchor kind a
    FeatureDims dims;
    int image_width = 0;
    int image_height = 0;

    // caches (filled when requested)
    BackboneCache backbone;
    ConvCache rpn_conv_cache;
    Tensor rpn_hidden;
    ConvCache cls_cache, reg_cache;

    double objectness_logit(std::size_t anchor_index, std::size_t anchors_per_cell) const;
    std::array<double, 4> anchor_deltas(std::size_t anchor_index, std::size_t anchors_per_cell) const;
};

/// Second-stage output for a set of ROIs.
struct HeadOutput {
    std::vector<BoundingBox> rois;
    std::vector<double> class_logits;  // R x 2 (background, ACP)
    std::vector<double> box_deltas;    // R x 4, normalized by head_box_std
    std::vector<double> pooled;        // cache: R x (C * P * P)
    std::vector<double> hidden;        // cache: R x head_hidden

    std::size_t size() const { return rois.size(); }
    double acp_probability(std::size_t i) const;
};

/// Gradients of a loss with respect to the network outputs.
struct OutputGradients {
    std::vector<double> objectness;   // same layout as RpnOutput::objectness
    std::vector<double> deltas;       // same layout as RpnOutput::deltas
    std::vector<double> class_logits; // R x 2
    std::vector<double> box_deltas;   // R x 4
};

/// Backbone + region proposal network + two-class box head.
class Network {
public:
    /// Builds the layer graph described by `config` with seeded random weights.
    explicit Network(const DetectorConfig& config, std::uint64_t init_seed);

    const DetectorConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// Feature map size for an input of the given size. Throws ShapeError when
    /// the input is smaller than one feature stride.
    FeatureDims feature_dims(int height, int width) const;

    RpnOutput forward_rpn(const Raster& raster, bool keep_cache) const;
    HeadOutput forward_head(const RpnOutput& rpn, std::vector<BoundingBox> rois, bool keep_cache) const;

    /// Accumulates parameter gradients for the given output gradients.
    void backward(const RpnOutput& rpn, const HeadOutput& head, const OutputGradients& dout,
                  Gradients& grads) const;

private:
    struct ResidualUnit {
        Conv2d first, second;
    };
    struct Block {
        Conv2d down;
        std::vector<ResidualUnit> units;
    };

    Tensor run_backbone(const Tensor& input, BackboneCache* cache) const;
    void backprop_backbone(const BackboneCache& cache, Tensor dfeatures, Gradients& grads) const;

    DetectorConfig config_;
    ParamStore params_;
    std::vector<Block> blocks_;
    Conv2d rpn_conv_, rpn_cls_, rpn_reg_;
    Linear fc_hidden_, fc_cls_, fc_reg_;
};

/// Network input from a [0,1] raster: (v - 0.5) / 0.25.
Tensor to_input(const Raster& raster);

}  // namespace acp::detector
