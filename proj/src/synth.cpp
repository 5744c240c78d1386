#include "acp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "acp/png_io.hpp"
#include "acp/seed.hpp"

namespace acp {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinCluster = 20.0;
constexpr double kMaxCluster = 44.0;

struct Blob {
    double cx, cy, rx, ry, amplitude;
};

// Anatomy-like backdrop: soft gradient, cervical spine shadows at both edges
// and a faint central ghost, the mandibular arc and a dentition band.
double background(double x, double y, int w, int h) {
    const double u = x / w, v = y / h;
    double b = 0.22 + 0.10 * v + 0.05 * std::cos(kPi * (u - 0.5));

    for (double xc : {0.035 * w, 0.965 * w}) {
        const double d = (x - xc) / (0.02 * w);
        b += 0.18 * std::exp(-d * d) * (0.75 + 0.25 * std::cos(2.0 * kPi * y / (0.12 * h)));
    }
    {
        const double d = (x - 0.5 * w) / (0.03 * w);
        b += 0.08 * std::exp(-d * d);
    }
    const double half = 0.36 * w;
    const double off = x - 0.5 * w;
    if (std::abs(off) <= half) {
        const double arc_y = 0.38 * h + 0.24 * h * (off / half) * (off / half);
        const double d = (y - arc_y) / 5.0;
        const double taper = std::min(1.0, (half - std::abs(off)) / 12.0);
        b += 0.22 * std::exp(-d * d) * taper;
    }
    if (u > 0.25 && u < 0.75) {
        const double window = std::sin(kPi * (u - 0.25) / 0.5);
        const double d = (y - 0.40 * h) / (0.07 * h);
        b += 0.15 * (0.5 + 0.5 * std::cos(2.0 * kPi * x / 22.0)) * std::exp(-d * d) * window;
    }
    return b;
}

double device_response(double v, int device) {
    if (device == 1) return 0.05 + 0.9 * std::pow(std::max(v, 0.0), 0.9);
    return v;
}

double device_noise_gain(int device) { return device == 1 ? 1.3 : 1.0; }

void validate(const PhantomSpec& spec) {
    if (spec.width < 64 || spec.height < 64) throw std::invalid_argument("phantom must be at least 64x64");
    if (spec.has_acp && (spec.n_acp_components < 1 || spec.n_acp_components > 3)) {
        throw std::invalid_argument("n_acp_components must be in [1, 3]");
    }
    if (!(spec.confuser_probability >= 0.0 && spec.confuser_probability <= 1.0)) {
        throw std::invalid_argument("confuser_probability must be in [0, 1]");
    }
    if (!(spec.noise_level >= 0.0 && spec.noise_level <= 1.0)) {
        throw std::invalid_argument("noise_level must be in [0, 1]");
    }
    if (spec.device != 0 && spec.device != 1) throw std::invalid_argument("device must be 0 or 1");
    const ImageDims dims{spec.width, spec.height};
    for (Side s : {Side::left, Side::right}) {
        const BoundingBox r = spec.acp_region.rect(s, dims);
        if (r.width() < kMaxCluster + 2 || r.height() < kMaxCluster + 2) {
            throw std::invalid_argument("acp_region too small for lesion clusters");
        }
    }
}

// Super-Gaussian profile: flat core, quick fall-off, irregular when several overlap.
double blob_signal(const Blob& b, double x, double y) {
    const double dx = (x - b.cx) / b.rx, dy = (y - b.cy) / b.ry;
    const double q = dx * dx + dy * dy;
    return b.amplitude * std::exp(-q * q);
}

}  // namespace

BoundingBox AcpRegion::rect(Side side, const ImageDims& dims) const {
    if (!(x_min >= 0.0 && y_min >= 0.0 && x_max <= 0.5 && y_max <= 1.0 && x_min < x_max && y_min < y_max)) {
        throw std::invalid_argument("acp_region must lie inside the frame half [0,0.5]x[0,1]");
    }
    const double w = dims.width, h = dims.height;
    if (side == Side::left) return {x_min * w, y_min * h, x_max * w, y_max * h};
    return {(1.0 - x_max) * w, y_min * h, (1.0 - x_min) * w, y_max * h};
}

const char* device_tag(int device) { return device == 1 ? "ProMax2D-phantom" : "CS8100-phantom"; }

Phantom generate_phantom(const PhantomSpec& spec) {
    validate(spec);
    const int w = spec.width, h = spec.height;
    const ImageDims dims{w, h};
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    Raster lesion(w, h, 0.0f);
    Raster confuser(w, h, 0.0f);
    Phantom out;
    out.annotation.image_id = "";
    out.annotation.annotator_ids = {"synth"};
    out.annotation.consensus = true;

    if (spec.has_acp) {
        std::vector<BoundingBox> extents;
        for (int k = 0; k < spec.n_acp_components; ++k) {
            const double cw = uniform(kMinCluster, kMaxCluster);
            const double ch = uniform(kMinCluster, kMaxCluster);
            Side side = unit(rng) < 0.5 ? Side::left : Side::right;
            std::optional<BoundingBox> placed;
            for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                if (attempt == 100) side = side == Side::left ? Side::right : Side::left;
                const BoundingBox r = spec.acp_region.rect(side, dims);
                const double x0 = uniform(r.x_min, r.x_max - cw);
                const double y0 = uniform(r.y_min, r.y_max - ch);
                const BoundingBox cand{x0, y0, x0 + cw, y0 + ch};
                const bool clear = std::none_of(extents.begin(), extents.end(), [&](const BoundingBox& e) {
                    return intersection_area(cand, {e.x_min - 6, e.y_min - 6, e.x_max + 6, e.y_max + 6}) > 0;
                });
                if (clear) placed = cand;
            }
            if (!placed) continue;
            extents.push_back(*placed);

            const BoundingBox e = *placed;
            std::vector<Blob> blobs(std::size_t(3 + int(unit(rng) * 4)));
            for (auto& b : blobs) {
                // Centers inset by 1.3 radii keep the above-threshold tail inside the extent.
                b.rx = std::min(uniform(3.0, 7.0), cw / 2.6);
                b.ry = std::min(uniform(3.0, 7.0), ch / 2.6);
                b.cx = uniform(e.x_min + 1.3 * b.rx, e.x_max - 1.3 * b.rx);
                b.cy = uniform(e.y_min + 1.3 * b.ry, e.y_max - 1.3 * b.ry);
                b.amplitude = uniform(0.5, 0.65);
            }
            int bx0 = w, by0 = h, bx1 = -1, by1 = -1;
            const int px0 = std::max(0, int(e.x_min) - 4), px1 = std::min(w - 1, int(e.x_max) + 4);
            const int py0 = std::max(0, int(e.y_min) - 4), py1 = std::min(h - 1, int(e.y_max) + 4);
            for (int y = py0; y <= py1; ++y) {
                for (int x = px0; x <= px1; ++x) {
                    double s = 0.0;
                    for (const auto& b : blobs) s = std::max(s, blob_signal(b, x + 0.5, y + 0.5));
                    if (float(s) < kLesionThreshold) continue;
                    lesion.at(x, y) = std::max(lesion.at(x, y), float(s));
                    bx0 = std::min(bx0, x);
                    by0 = std::min(by0, y);
                    bx1 = std::max(bx1, x);
                    by1 = std::max(by1, y);
                }
            }
            if (bx1 >= bx0) {
                out.annotation.boxes.push_back({double(bx0), double(by0), double(bx1 + 1), double(by1 + 1)});
            }
        }
    }

    if (unit(rng) < spec.confuser_probability) {
        const Side side = unit(rng) < 0.5 ? Side::left : Side::right;
        const BoundingBox r = spec.acp_region.rect(side, dims);
        const double rx = uniform(6.0, 10.0), ry = uniform(4.0, 7.0);
        const double cx = uniform(r.x_min + 1.5 * rx, r.x_max - 1.5 * rx);
        const double top = std::max(1.5 * ry, r.y_min - 0.15 * h);
        const double cy = uniform(top, r.y_min - 2.5 * ry);
        const double amp = uniform(0.25, 0.35);
        for (int y = std::max(0, int(cy - 3 * ry)); y <= std::min(h - 1, int(cy + 3 * ry)); ++y) {
            for (int x = std::max(0, int(cx - 3 * rx)); x <= std::min(w - 1, int(cx + 3 * rx)); ++x) {
                const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
                confuser.at(x, y) = float(amp * std::exp(-(dx * dx + dy * dy)));
            }
        }
        out.confusers.push_back({cx - 1.5 * rx, cy - 1.5 * ry, cx + 1.5 * rx, cy + 1.5 * ry});
    }

    std::normal_distribution<double> noise(0.0, 0.06 * spec.noise_level * device_noise_gain(spec.device));
    Raster pixels(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = background(x + 0.5, y + 0.5, w, h) + lesion.at(x, y) + confuser.at(x, y);
            v = device_response(v, spec.device) + noise(rng);
            pixels.at(x, y) = float(std::clamp(v, 0.0, 1.0));
        }
    }

    out.image.pixels = std::move(pixels);
    out.image.device_tag = device_tag(spec.device);
    out.image.bit_depth_source = 16;
    out.lesion_signal = std::move(lesion);
    return out;
}

std::size_t positive_count(std::size_t n, double prevalence) {
    if (!(prevalence >= 0.0 && prevalence <= 1.0)) throw std::invalid_argument("prevalence must be in [0, 1]");
    return std::size_t(std::lround(prevalence * double(n)));
}

Manifest generate_dataset(const DatasetOptions& options, const fs::path& out_dir) {
    const std::size_t n = options.n;
    const std::size_t positives = positive_count(n, options.prevalence);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> is_positive(n, false);
    for (std::size_t k = 0; k < positives; ++k) is_positive[order[k]] = true;

    fs::create_directories(out_dir / "images");
    Manifest manifest;
    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "phantom_%03zu", i);

        PhantomSpec spec = options.base;
        spec.seed = derive_seed(options.seed, i);
        std::mt19937_64 item_rng(derive_seed(spec.seed, 1));
        spec.has_acp = is_positive[i];
        spec.n_acp_components = 1 + int(item_rng() % 3);
        spec.device = int(item_rng() % 2);

        Phantom ph = generate_phantom(spec);
        ph.image.id = id;
        ph.annotation.image_id = id;

        const fs::path rel = fs::path("images") / (std::string(id) + ".png");
        write_png_gray(out_dir / rel, ph.image.pixels, 16);
        manifest.images.push_back({id, out_dir / rel, ph.image.device_tag, spec.width, spec.height});
        manifest.annotations.push_back(std::move(ph.annotation));
    }
    save_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace acp
