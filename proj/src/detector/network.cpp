#include "acp/detector/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace acp::detector {

Tensor to_input(const Raster& raster) {
    Tensor t(1, raster.height(), raster.width());
    const auto px = raster.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) t.data[i] = (double(px[i]) - 0.5) / 0.25;
    return t;
}

double RpnOutput::objectness_logit(std::size_t anchor_index, std::size_t a_per_cell) const {
    const std::size_t cell = anchor_index / a_per_cell;
    const std::size_t kind = anchor_index % a_per_cell;
    return objectness.data[kind * objectness.plane() + cell];
}

std::array<double, 4> RpnOutput::anchor_deltas(std::size_t anchor_index, std::size_t a_per_cell) const {
    const std::size_t cell = anchor_index / a_per_cell;
    const std::size_t kind = anchor_index % a_per_cell;
    std::array<double, 4> d{};
    for (std::size_t k = 0; k < 4; ++k) d[k] = deltas.data[(4 * kind + k) * deltas.plane() + cell];
    return d;
}

double HeadOutput::acp_probability(std::size_t i) const {
    const double bg = class_logits[2 * i], fg = class_logits[2 * i + 1];
    return 1.0 / (1.0 + std::exp(bg - fg));
}

Network::Network(const DetectorConfig& config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    const auto units = config_.residual_units();
    int in = 1;
    for (std::size_t b = 0; b < config_.backbone_channels.size(); ++b) {
        const int ch = config_.backbone_channels[b];
        const std::string prefix = "backbone.block" + std::to_string(b);
        Block block;
        block.down = Conv2d::create(params_, prefix + ".down", in, ch, 3, 2, 1);
        for (int u = 0; u < units[b]; ++u) {
            const std::string up = prefix + ".unit" + std::to_string(u);
            block.units.push_back({Conv2d::create(params_, up + ".conv1", ch, ch, 3, 1, 1),
                                   Conv2d::create(params_, up + ".conv2", ch, ch, 3, 1, 1)});
        }
        blocks_.push_back(std::move(block));
        in = ch;
    }
    const int a = int(config_.anchors_per_cell());
    rpn_conv_ = Conv2d::create(params_, "rpn.conv", in, config_.rpn_channels, 3, 1, 1);
    rpn_cls_ = Conv2d::create(params_, "rpn.objectness", config_.rpn_channels, a, 1, 1, 0);
    rpn_reg_ = Conv2d::create(params_, "rpn.deltas", config_.rpn_channels, 4 * a, 1, 1, 0);
    const int pooled = in * config_.roi_pool_size * config_.roi_pool_size;
    fc_hidden_ = Linear::create(params_, "head.fc", pooled, config_.head_hidden);
    fc_cls_ = Linear::create(params_, "head.cls", config_.head_hidden, 2);
    fc_reg_ = Linear::create(params_, "head.deltas", config_.head_hidden, 4);

    std::mt19937_64 rng(init_seed);
    for (const auto& block : blocks_) {
        init_he(params_, block.down, rng);
        for (const auto& unit : block.units) {
            init_he(params_, unit.first, rng);
            init_normal(params_, unit.second.weight,
                        0.5 * std::sqrt(2.0 / (unit.second.in * unit.second.kernel * unit.second.kernel)), rng);
        }
    }
    init_he(params_, rpn_conv_, rng);
    init_normal(params_, rpn_cls_.weight, 0.01, rng);
    init_normal(params_, rpn_reg_.weight, 0.01, rng);
    init_he(params_, fc_hidden_, rng);
    init_normal(params_, fc_cls_.weight, 0.01, rng);
    init_normal(params_, fc_reg_.weight, 0.001, rng);
}

FeatureDims Network::feature_dims(int height, int width) const {
    if (height < config_.feature_stride || width < config_.feature_stride) {
        throw ShapeError("input " + std::to_string(width) + "x" + std::to_string(height) +
                         " is smaller than one feature stride (" + std::to_string(config_.feature_stride) + " px)");
    }
    int h = height, w = width;
    for (const auto& block : blocks_) {
        h = block.down.out_size(h);
        w = block.down.out_size(w);
    }
    return {h, w};
}

Tensor Network::run_backbone(const Tensor& input, BackboneCache* cache) const {
    Tensor x = input;
    if (cache) cache->blocks.assign(blocks_.size(), {});
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const Block& block = blocks_[b];
        BackboneCache::Block* bc = cache ? &cache->blocks[b] : nullptr;
        x = conv_forward(params_, block.down, x, bc ? &bc->down : nullptr);
        relu_inplace(x.data);
        if (bc) {
            bc->down_out = x;
            bc->units.resize(block.units.size());
        }
        for (std::size_t u = 0; u < block.units.size(); ++u) {
            BackboneCache::Unit* uc = bc ? &bc->units[u] : nullptr;
            Tensor mid = conv_forward(params_, block.units[u].first, x, uc ? &uc->first : nullptr);
            relu_inplace(mid.data);
            Tensor y = conv_forward(params_, block.units[u].second, mid, uc ? &uc->second : nullptr);
            for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += x.data[i];
            relu_inplace(y.data);
            if (uc) {
                uc->mid = std::move(mid);
                uc->out = y;
            }
            x = std::move(y);
        }
    }
    return x;
}

RpnOutput Network::forward_rpn(const Raster& raster, bool keep_cache) const {
    RpnOutput out;
    out.dims = feature_dims(raster.height(), raster.width());
    out.image_width = raster.width();
    out.image_height = raster.height();
    out.features = run_backbone(to_input(raster), keep_cache ? &out.backbone : nullptr);
    Tensor hidden = conv_forward(params_, rpn_conv_, out.features, keep_cache ? &out.rpn_conv_cache : nullptr);
    relu_inplace(hidden.data);
    out.objectness = conv_forward(params_, rpn_cls_, hidden, keep_cache ? &out.cls_cache : nullptr);
    out.deltas = conv_forward(params_, rpn_reg_, hidden, keep_cache ? &out.reg_cache : nullptr);
    if (keep_cache) out.rpn_hidden = std::move(hidden);
    return out;
}

HeadOutput Network::forward_head(const RpnOutput& rpn, std::vector<BoundingBox> rois, bool keep_cache) const {
    HeadOutput out;
    out.rois = std::move(rois);
    const int r = int(out.rois.size());
    std::vector<double> pooled =
        roi_pool_forward(rpn.features, out.rois, config_.roi_pool_size, config_.feature_stride);
    std::vector<double> hidden = linear_forward(params_, fc_hidden_, pooled, r);
    relu_inplace(hidden);
    out.class_logits = linear_forward(params_, fc_cls_, hidden, r);
    out.box_deltas = linear_forward(params_, fc_reg_, hidden, r);
    if (keep_cache) {
        out.pooled = std::move(pooled);
        out.hidden = std::move(hidden);
    }
    return out;
}

void Network::backprop_backbone(const BackboneCache& cache, Tensor dx, Gradients& grads) const {
    for (std::size_t b = blocks_.size(); b-- > 0;) {
        const Block& block = blocks_[b];
        const auto& bc = cache.blocks[b];
        for (std::size_t u = block.units.size(); u-- > 0;) {
            const auto& uc = bc.units[u];
            relu_backward(uc.out.data, dx.data);  // dx is now d(sum)
            Tensor dmid;
            conv_backward(params_, block.units[u].second, uc.second, dx, grads, &dmid);
            relu_backward(uc.mid.data, dmid.data);
            Tensor dinner;
            conv_backward(params_, block.units[u].first, uc.first, dmid, grads, &dinner);
            for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dinner.data[i];
        }
        relu_backward(bc.down_out.data, dx.data);
        Tensor dprev;
        conv_backward(params_, block.down, bc.down, dx, grads, b == 0 ? nullptr : &dprev);
        if (b > 0) dx = std::move(dprev);
    }
}

void Network::backward(const RpnOutput& rpn, const HeadOutput& head, const OutputGradients& dout,
                       Gradients& grads) const {
    if (grads.size() != params_.total_size()) grads.assign(params_.total_size(), 0.0);
    Tensor dfeatures(rpn.features.channels, rpn.features.height, rpn.features.width);

    const int r = int(head.size());
    if (r > 0 && !dout.class_logits.empty()) {
        auto dhidden_cls = linear_backward(params_, fc_cls_, head.hidden, dout.class_logits, r, grads, true);
        auto dhidden_reg = linear_backward(params_, fc_reg_, head.hidden, dout.box_deltas, r, grads, true);
        for (std::size_t i = 0; i < dhidden_cls.size(); ++i) dhidden_cls[i] += dhidden_reg[i];
        relu_backward(head.hidden, dhidden_cls);
        auto dpooled = linear_backward(params_, fc_hidden_, head.pooled, dhidden_cls, r, grads, true);
        roi_pool_backward(head.rois, config_.roi_pool_size, config_.feature_stride, dpooled, dfeatures);
    }

    Tensor dcls(rpn.objectness.channels, rpn.objectness.height, rpn.objectness.width);
    Tensor dreg(rpn.deltas.channels, rpn.deltas.height, rpn.deltas.width);
    if (!dout.objectness.empty()) dcls.data = dout.objectness;
    if (!dout.deltas.empty()) dreg.data = dout.deltas;
    Tensor dhidden, dhidden_reg;
    conv_backward(params_, rpn_cls_, rpn.cls_cache, dcls, grads, &dhidden);
    conv_backward(params_, rpn_reg_, rpn.reg_cache, dreg, grads, &dhidden_reg);
    for (std::size_t i = 0; i < dhidden.data.size(); ++i) dhidden.data[i] += dhidden_reg.data[i];
    relu_backward(rpn.rpn_hidden.data, dhidden.data);
    Tensor dfeat_rpn;
    conv_backward(params_, rpn_conv_, rpn.rpn_conv_cache, dhidden, grads, &dfeat_rpn);
    for (std::size_t i = 0; i < dfeatures.data.size(); ++i) dfeatures.data[i] += dfeat_rpn.data[i];

    backprop_backbone(rpn.backbone, std::move(dfeatures), grads);
}

}  // namespace acp::detector
