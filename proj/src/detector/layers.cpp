#include "acp/detector/layers.hpp"

// Always take the blocked GEMM path. Eigen's small-size coefficient product
// peels its vectorized dot products by pointer alignment, so identical inputs
// in differently aligned buffers could round differently.
#define EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 0
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acp::detector {

namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;
using CVec = Eigen::Map<const Eigen::VectorXd>;

struct Sample {
    int x0, x1, y0, y1;
    double wx, wy;  // weight of the +1 neighbour
};

Sample bilinear_sample(double sx, double sy, int w, int h) {
    sx = std::clamp(sx, 0.0, double(w - 1));
    sy = std::clamp(sy, 0.0, double(h - 1));
    Sample s;
    s.x0 = int(std::floor(sx));
    s.y0 = int(std::floor(sy));
    s.x1 = std::min(s.x0 + 1, w - 1);
    s.y1 = std::min(s.y0 + 1, h - 1);
    s.wx = sx - s.x0;
    s.wy = sy - s.y0;
    return s;
}

}  // namespace

std::size_t ParamStore::add(std::string name, std::vector<int> shape) {
    std::size_t size = 1;
    for (int d : shape) size *= std::size_t(d);
    entries_.push_back({std::move(name), std::move(shape), values_.size(), size});
    values_.resize(values_.size() + size, 0.0);
    return entries_.size() - 1;
}

Conv2d Conv2d::create(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride,
                      int pad) {
    Conv2d c;
    c.in = in;
    c.out = out;
    c.kernel = kernel;
    c.stride = stride;
    c.pad = pad;
    c.weight = store.add(name + ".weight", {out, in, kernel, kernel});
    c.bias = store.add(name + ".bias", {out});
    return c;
}

Linear Linear::create(ParamStore& store, const std::string& name, int in, int out) {
    Linear l;
    l.in = in;
    l.out = out;
    l.weight = store.add(name + ".weight", {out, in});
    l.bias = store.add(name + ".bias", {out});
    return l;
}

Tensor conv_forward(const ParamStore& params, const Conv2d& conv, const Tensor& x, ConvCache* cache) {
    if (x.channels != conv.in) throw std::invalid_argument("conv_forward: channel mismatch");
    const int oh = conv.out_size(x.height), ow = conv.out_size(x.width);
    if (oh < 1 || ow < 1) throw std::invalid_argument("conv_forward: input smaller than kernel");
    const int k = conv.kernel;
    const std::size_t rows = std::size_t(conv.in) * k * k;
    const std::size_t cols = std::size_t(oh) * ow;

    std::vector<double> columns(rows * cols, 0.0);
    for (int c = 0; c < conv.in; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* dst = columns.data() + (std::size_t(c * k + ky) * k + kx) * cols;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * conv.stride - conv.pad + ky;
                    if (iy < 0 || iy >= x.height) continue;
                    const double* src = x.data.data() + std::size_t(c) * x.plane() + std::size_t(iy) * x.width;
                    double* row = dst + std::size_t(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * conv.stride - conv.pad + kx;
                        if (ix >= 0 && ix < x.width) row[ox] = src[ix];
                    }
                }
            }
        }
    }

    Tensor y(conv.out, oh, ow);
    CMapR w(params.data(conv.weight), conv.out, Eigen::Index(rows));
    CMapR col(columns.data(), Eigen::Index(rows), Eigen::Index(cols));
    MapR out(y.data.data(), conv.out, Eigen::Index(cols));
    out.noalias() = w * col;
    out.colwise() += CVec(params.data(conv.bias), conv.out);

    if (cache) {
        cache->columns = std::move(columns);
        cache->in_h = x.height;
        cache->in_w = x.width;
        cache->out_h = oh;
        cache->out_w = ow;
    }
    return y;
}

void conv_backward(const ParamStore& params, const Conv2d& conv, const ConvCache& cache, const Tensor& dy,
                   Gradients& grads, Tensor* dx) {
    const int k = conv.kernel;
    const std::size_t rows = std::size_t(conv.in) * k * k;
    const std::size_t cols = std::size_t(cache.out_h) * cache.out_w;
    CMapR dout(dy.data.data(), conv.out, Eigen::Index(cols));
    CMapR col(cache.columns.data(), Eigen::Index(rows), Eigen::Index(cols));

    const auto& wi = params.entry(conv.weight);
    const auto& bi = params.entry(conv.bias);
    MapR dw(grads.data() + wi.offset, conv.out, Eigen::Index(rows));
    dw.noalias() += dout * col.transpose();
    // Plain loops: Eigen's vectorized sums peel by alignment, which would make
    // the result depend on where the allocator placed the buffer.
    double* db = grads.data() + bi.offset;
    for (int o = 0; o < conv.out; ++o) {
        const double* row = dy.data.data() + std::size_t(o) * cols;
        double s = 0.0;
        for (std::size_t i = 0; i < cols; ++i) s += row[i];
        db[o] += s;
    }

    if (!dx) return;
    CMapR w(params.data(conv.weight), conv.out, Eigen::Index(rows));
    MatR dcol = w.transpose() * dout;
    *dx = Tensor(conv.in, cache.in_h, cache.in_w);
    for (int c = 0; c < conv.in; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* src = dcol.data() + (std::size_t(c * k + ky) * k + kx) * cols;
                for (int oy = 0; oy < cache.out_h; ++oy) {
                    const int iy = oy * conv.stride - conv.pad + ky;
                    if (iy < 0 || iy >= cache.in_h) continue;
                    double* dst = dx->data.data() + std::size_t(c) * dx->plane() + std::size_t(iy) * cache.in_w;
                    const double* row = src + std::size_t(oy) * cache.out_w;
                    for (int ox = 0; ox < cache.out_w; ++ox) {
                        const int ix = ox * conv.stride - conv.pad + kx;
                        if (ix >= 0 && ix < cache.in_w) dst[ix] += row[ox];
                    }
                }
            }
        }
    }
}

void relu_inplace(std::span<double> v) {
    for (auto& x : v) x = x > 0.0 ? x : 0.0;
}

void relu_backward(std::span<const double> activated, std::span<double> dy) {
    for (std::size_t i = 0; i < dy.size(); ++i) {
        if (!(activated[i] > 0.0)) dy[i] = 0.0;
    }
}

std::vector<double> linear_forward(const ParamStore& params, const Linear& layer, std::span<const double> x,
                                   int rows) {
    std::vector<double> y(std::size_t(rows) * layer.out);
    if (rows == 0) return y;
    CMapR in(x.data(), rows, layer.in);
    CMapR w(params.data(layer.weight), layer.out, layer.in);
    MapR out(y.data(), rows, layer.out);
    out.noalias() = in * w.transpose();
    out.rowwise() += CVec(params.data(layer.bias), layer.out).transpose();
    return y;
}

std::vector<double> linear_backward(const ParamStore& params, const Linear& layer, std::span<const double> x,
                                    std::span<const double> dy, int rows, Gradients& grads, bool want_dx) {
    std::vector<double> dx;
    if (rows == 0) return dx;
    CMapR in(x.data(), rows, layer.in);
    CMapR dout(dy.data(), rows, layer.out);
    MapR dw(grads.data() + params.entry(layer.weight).offset, layer.out, layer.in);
    dw.noalias() += dout.transpose() * in;
    double* db = grads.data() + params.entry(layer.bias).offset;
    for (int r = 0; r < rows; ++r) {
        for (int o = 0; o < layer.out; ++o) db[o] += dy[std::size_t(r) * layer.out + o];
    }
    if (want_dx) {
        dx.resize(std::size_t(rows) * layer.in);
        CMapR w(params.data(layer.weight), layer.out, layer.in);
        MapR din(dx.data(), rows, layer.in);
        din.noalias() = dout * w;
    }
    return dx;
}

std::vector<double> roi_pool_forward(const Tensor& f, std::span<const BoundingBox> rois, int pool,
                                     double stride) {
    const std::size_t per_roi = std::size_t(f.channels) * pool * pool;
    std::vector<double> out(rois.size() * per_roi, 0.0);
    for (std::size_t r = 0; r < rois.size(); ++r) {
        const BoundingBox& roi = rois[r];
        const double bw = roi.width() / pool, bh = roi.height() / pool;
        double* dst = out.data() + r * per_roi;
        for (int py = 0; py < pool; ++py) {
            for (int px = 0; px < pool; ++px) {
                const double sx = (roi.x_min + (px + 0.5) * bw) / stride - 0.5;
                const double sy = (roi.y_min + (py + 0.5) * bh) / stride - 0.5;
                const Sample s = bilinear_sample(sx, sy, f.width, f.height);
                for (int c = 0; c < f.channels; ++c) {
                    const double top = f.at(c, s.y0, s.x0) * (1 - s.wx) + f.at(c, s.y0, s.x1) * s.wx;
                    const double bot = f.at(c, s.y1, s.x0) * (1 - s.wx) + f.at(c, s.y1, s.x1) * s.wx;
                    dst[(std::size_t(c) * pool + py) * pool + px] = top * (1 - s.wy) + bot * s.wy;
                }
            }
        }
    }
    return out;
}

void roi_pool_backward(std::span<const BoundingBox> rois, int pool, double stride, std::span<const double> dpooled,
                       Tensor& df) {
    const std::size_t per_roi = std::size_t(df.channels) * pool * pool;
    for (std::size_t r = 0; r < rois.size(); ++r) {
        const BoundingBox& roi = rois[r];
        const double bw = roi.width() / pool, bh = roi.height() / pool;
        const double* src = dpooled.data() + r * per_roi;
        for (int py = 0; py < pool; ++py) {
            for (int px = 0; px < pool; ++px) {
                const double sx = (roi.x_min + (px + 0.5) * bw) / stride - 0.5;
                const double sy = (roi.y_min + (py + 0.5) * bh) / stride - 0.5;
                const Sample s = bilinear_sample(sx, sy, df.width, df.height);
                for (int c = 0; c < df.channels; ++c) {
                    const double g = src[(std::size_t(c) * pool + py) * pool + px];
                    df.at(c, s.y0, s.x0) += g * (1 - s.wx) * (1 - s.wy);
                    df.at(c, s.y0, s.x1) += g * s.wx * (1 - s.wy);
                    df.at(c, s.y1, s.x0) += g * (1 - s.wx) * s.wy;
                    df.at(c, s.y1, s.x1) += g * s.wx * s.wy;
                }
            }
        }
    }
}

void init_normal(ParamStore& store, std::size_t entry, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    double* p = store.data(entry);
    for (std::size_t i = 0; i < store.entry(entry).size; ++i) p[i] = dist(rng);
}

void init_he(ParamStore& store, const Conv2d& conv, std::mt19937_64& rng) {
    init_normal(store, conv.weight, std::sqrt(2.0 / (conv.in * conv.kernel * conv.kernel)), rng);
}

void init_he(ParamStore& store, const Linear& layer, std::mt19937_64& rng) {
    init_normal(store, layer.weight, std::sqrt(2.0 / layer.in), rng);
}

}  // namespace acp::detector
