#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "acp/box.hpp"

namespace acp::detector {

/// Dense C x H x W activation.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), data(std::size_t(c) * std::size_t(h) * std::size_t(w), fill) {}

    std::size_t plane() const { return std::size_t(height) * std::size_t(width); }
    double& at(int c, int y, int x) { return data[std::size_t(c) * plane() + std::size_t(y) * width + x]; }
    double at(int c, int y, int x) const { return data[std::size_t(c) * plane() + std::size_t(y) * width + x]; }
};

struct ParamInfo {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// All trainable parameters in one flat buffer; gradients and optimizer state
/// use the same layout.
class ParamStore {
public:
    std::size_t add(std::string name, std::vector<int> shape);

    std::span<const ParamInfo> entries() const { return entries_; }
    const ParamInfo& entry(std::size_t i) const { return entries_[i]; }
    std::size_t total_size() const { return values_.size(); }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    const double* data(std::size_t i) const { return values_.data() + entries_[i].offset; }
    double* data(std::size_t i) { return values_.data() + entries_[i].offset; }

private:
    std::vector<ParamInfo> entries_;
    std::vector<double> values_;
};

using Gradients = std::vector<double>;  // same layout as ParamStore::values()

struct Conv2d {
    int in = 0, out = 0, kernel = 3, stride = 1, pad = 1;
    std::size_t weight = 0, bias = 0;  // ParamStore entries

    static Conv2d create(ParamStore& store, const std::string& name, int in, int out, int kernel,
                         int stride, int pad);
    int out_size(int in_size) const { return (in_size + 2 * pad - kernel) / stride + 1; }
};

struct ConvCache {
    std::vector<double> columns;  // (in*k*k) x (out_h*out_w)
    int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
};

Tensor conv_forward(const ParamStore& params, const Conv2d& conv, const Tensor& x, ConvCache* cache);

/// Accumulates weight/bias gradients; writes the input gradient when `dx` is set.
void conv_backward(const ParamStore& params, const Conv2d& conv, const ConvCache& cache, const Tensor& dy,
                   Gradients& grads, Tensor* dx);

void relu_inplace(std::span<double> v);
/// dy *= (activated output > 0)
void relu_backward(std::span<const double> activated, std::span<double> dy);

struct Linear {
    int in = 0, out = 0;
    std::size_t weight = 0, bias = 0;  // weight is out x in

    static Linear create(ParamStore& store, const std::string& name, int in, int out);
};

/// rows x in -> rows x out
std::vector<double> linear_forward(const ParamStore& params, const Linear& layer, std::span<const double> x,
                                   int rows);
/// Accumulates parameter gradients; returns the input gradient (rows x in) when wanted.
std::vector<double> linear_backward(const ParamStore& params, const Linear& layer, std::span<const double> x,
                                    std::span<const double> dy, int rows, Gradients& grads, bool want_dx);

/// Bilinear ROI pooling: one sample at the center of each cell of a
/// pool x pool grid laid over the ROI (image coordinates, mapped to the
/// feature map by `stride`). Sample positions are clamped to the map.
/// Output is rois.size() x (C * pool * pool), channel-major per ROI.
std::vector<double> roi_pool_forward(const Tensor& features, std::span<const BoundingBox> rois, int pool,
                                     double stride);
/// Scatters `dpooled` back into `dfeatures` (same shape as the forward features).
void roi_pool_backward(std::span<const BoundingBox> rois, int pool, double stride, std::span<const double> dpooled,
                       Tensor& dfeatures);

/// He-normal weights, zero biases.
void init_he(ParamStore& store, const Conv2d& conv, std::mt19937_64& rng);
void init_he(ParamStore& store, const Linear& layer, std::mt19937_64& rng);
void init_normal(ParamStore& store, std::size_t entry, double stddev, std::mt19937_64& rng);

}  // namespace acp::detector
