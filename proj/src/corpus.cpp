#include "acp/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "acp/png_io.hpp"

namespace acp {

namespace fs = std::filesystem;
using nlohmann::json;

const ImageRecord* Manifest::find_image(const std::string& id) const {
    for (const auto& img : images) {
        if (img.id == id) return &img;
    }
    return nullptr;
}

const Annotation* Manifest::consensus_for(const std::string& image_id) const {
    const Annotation* found = nullptr;
    for (const auto& a : annotations) {
        if (a.image_id == image_id && a.consensus) found = &a;
    }
    return found;
}

bool Manifest::has_acp(const std::string& image_id) const {
    const auto* a = consensus_for(image_id);
    return a && a->has_acp();
}

// --- JSON ------------------------------------------------------------------

void to_json(json& j, const BoundingBox& b) {
    j = json{{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max}};
}

void from_json(const json& j, BoundingBox& b) {
    b.x_min = j.at("x_min").get<double>();
    b.y_min = j.at("y_min").get<double>();
    b.x_max = j.at("x_max").get<double>();
    b.y_max = j.at("y_max").get<double>();
}

void to_json(json& j, const Annotation& a) {
    j = json{{"image_id", a.image_id},
             {"annotator_ids", a.annotator_ids},
             {"consensus", a.consensus},
             {"boxes", a.boxes}};
}

void from_json(const json& j, Annotation& a) {
    a.image_id = j.at("image_id").get<std::string>();
    a.annotator_ids = j.value("annotator_ids", std::vector<std::string>{});
    a.consensus = j.value("consensus", true);
    a.boxes = j.at("boxes").get<std::vector<BoundingBox>>();
}

void to_json(json& j, const RoiSpec& s) {
    j = json{{"left", s.left}, {"right", s.right}, {"margin_px", s.margin_px},
             {"derived_from", s.derived_from}};
}

void from_json(const json& j, RoiSpec& s) {
    s.left = j.at("left").get<BoundingBox>();
    s.right = j.at("right").get<BoundingBox>();
    s.margin_px = j.value("margin_px", 0.0);
    s.derived_from = j.value("derived_from", std::vector<std::string>{});
}

void to_json(json& j, const DatasetSplit& s) {
    j = json{{"seed", s.seed}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
}

void from_json(const json& j, DatasetSplit& s) {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train = j.at("train").get<std::vector<std::string>>();
    s.val = j.at("val").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
}

// --- files -----------------------------------------------------------------

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw LoadError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

}  // namespace

void validate_manifest(const Manifest& manifest) {
    std::set<std::string> ids;
    for (const auto& img : manifest.images) {
        if (img.id.empty()) throw ValidationError("image with empty id");
        if (!ids.insert(img.id).second) throw ValidationError("duplicate image id " + img.id);
        if (img.width < 1 || img.height < 1) {
            throw ValidationError("image " + img.id + ": width and height must be >= 1");
        }
    }
    for (const auto& a : manifest.annotations) {
        const auto* img = manifest.find_image(a.image_id);
        if (!img) throw ValidationError("annotation references unknown image id " + a.image_id);
        for (const auto& b : a.boxes) {
            validate_box(b, "annotation for " + a.image_id);
            if (!img->dims().frame().contains(b)) {
                throw ValidationError("annotation for " + a.image_id + ": box " + to_string(b) +
                                      " outside image bounds");
            }
        }
    }
}

Manifest load_manifest(const fs::path& path) {
    if (!fs::exists(path)) throw LoadError("manifest not found: " + path.string());
    const json doc = parse_json_file(path);
    const fs::path base = fs::absolute(path).parent_path();

    Manifest m;
    try {
        m.version = doc.at("version").get<int>();
        if (m.version != kManifestVersion) {
            throw LoadError("unsupported manifest version " + std::to_string(m.version) +
                            " (expected " + std::to_string(kManifestVersion) + ")");
        }
        for (const auto& item : doc.at("images")) {
            ImageRecord rec;
            rec.id = item.at("id").get<std::string>();
            rec.path = item.at("path").get<std::string>();
            if (rec.path.is_relative()) rec.path = base / rec.path;
            rec.device_tag = item.value("device_tag", "");
            rec.width = item.at("width").get<int>();
            rec.height = item.at("height").get<int>();
            m.images.push_back(std::move(rec));
        }
        for (const auto& item : doc.at("annotations")) {
            m.annotations.push_back(item.get<Annotation>());
        }
    } catch (const json::exception& e) {
        throw LoadError("malformed manifest " + path.string() + ": " + e.what());
    }

    validate_manifest(m);
    for (const auto& img : m.images) {
        if (!fs::exists(img.path)) {
            throw LoadError("image " + img.id + ": file not found " + img.path.string());
        }
    }
    return m;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
    validate_manifest(manifest);
    const fs::path base = fs::absolute(path).parent_path();
    json images = json::array();
    for (const auto& img : manifest.images) {
        fs::path p = fs::absolute(img.path).lexically_normal();
        const auto rel = p.lexically_relative(base);
        if (!rel.empty() && *rel.begin() != "..") p = rel;
        images.push_back({{"id", img.id},
                          {"path", p.generic_string()},
                          {"device_tag", img.device_tag},
                          {"width", img.width},
                          {"height", img.height}});
    }
    json doc{{"version", manifest.version}, {"images", images}, {"annotations", manifest.annotations}};
    write_file_atomic(path, doc.dump(2) + "\n");
}

PanoramicImage load_image(const ImageRecord& record) {
    LoadedPng png;
    try {
        png = read_png_gray(record.path);
    } catch (const ImageIoError& e) {
        throw LoadError("image " + record.id + ": " + e.what());
    }
    if (png.raster.width() != record.width || png.raster.height() != record.height) {
        throw LoadError("image " + record.id + ": manifest says " + std::to_string(record.width) +
                        "x" + std::to_string(record.height) + ", file is " +
                        std::to_string(png.raster.width()) + "x" + std::to_string(png.raster.height()));
    }
    return PanoramicImage{record.id, std::move(png.raster), record.device_tag, png.bit_depth};
}

DatasetSplit load_split(const fs::path& path) { return parse_json_file(path).get<DatasetSplit>(); }

void save_split(const DatasetSplit& split, const fs::path& path) {
    write_file_atomic(path, json(split).dump(2) + "\n");
}

RoiSpec load_roi_spec(const fs::path& path) { return parse_json_file(path).get<RoiSpec>(); }

void save_roi_spec(const RoiSpec& spec, const fs::path& path) {
    write_file_atomic(path, json(spec).dump(2) + "\n");
}

// --- splitting -------------------------------------------------------------

SplitSizes split_sizes(std::size_t n, const SplitFractions& f) {
    const double sum = f.train + f.val + f.test;
    if (std::abs(sum - 1.0) > 1e-9) throw SplitError("split fractions must sum to 1");
    if (f.train < 0 || f.val < 0 || f.test < 0) throw SplitError("split fractions must be non-negative");
    // The epsilon keeps products such as 0.7 * 10 = 6.999... from flooring low.
    const auto train = std::size_t(std::floor(f.train * double(n) + 1e-9));
    const auto val = std::size_t(std::floor(f.val * double(n) + 1e-9));
    return {train, val, n - train - val};
}

DatasetSplit split_dataset(std::span<const std::string> ids, std::span<const bool> has_acp,
                           const SplitFractions& fractions, std::uint64_t seed) {
    const std::size_t n = ids.size();
    if (n < 3) throw SplitError("need at least 3 images to populate train/val/test, got " + std::to_string(n));
    if (!has_acp.empty() && has_acp.size() != n) throw SplitError("label count does not match id count");
    {
        std::set<std::string> unique(ids.begin(), ids.end());
        if (unique.size() != n) throw SplitError("duplicate ids in split input");
    }
    const SplitSizes sizes = split_sizes(n, fractions);
    const std::array<std::size_t, 3> size{sizes.train, sizes.val, sizes.test};

    std::vector<std::string> pos, neg;
    for (std::size_t i = 0; i < n; ++i) {
        (!has_acp.empty() && has_acp[i] ? pos : neg).push_back(ids[i]);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    // Positives per split: proportional share, then repaired so that every
    // count fits its split and non-empty splits get a positive when possible.
    const double prevalence = double(pos.size()) / double(n);
    std::array<std::size_t, 3> npos{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 2; ++s) {
        npos[s] = std::min<std::size_t>(size[s], std::size_t(std::lround(prevalence * double(size[s]))));
        npos[s] = std::min(npos[s], pos.size() - assigned);
        assigned += npos[s];
    }
    npos[2] = pos.size() - assigned;
    auto shift = [&](std::size_t from, std::size_t to) {
        --npos[from];
        ++npos[to];
    };
    // Too many positives for the test split: push surplus into train then val.
    for (std::size_t s : {0u, 1u}) {
        while (npos[2] > size[2] && npos[s] < size[s]) shift(2, s);
    }
    // Not enough negatives anywhere is impossible: counts sum to n per split.
    for (std::size_t s = 0; s < 3; ++s) {
        if (size[s] == 0 || npos[s] > 0 || pos.size() < 3) continue;
        const auto donor = std::size_t(std::max_element(npos.begin(), npos.end()) - npos.begin());
        if (npos[donor] > 1) shift(donor, s);
    }
    // Symmetric guarantee for negatives; a single-image split keeps its positive.
    for (std::size_t s = 0; s < 3; ++s) {
        if (size[s] < 2 || npos[s] < size[s] || neg.size() < 3) continue;
        std::size_t donor = 3;
        for (std::size_t d = 0; d < 3; ++d) {
            if (d != s && size[d] - npos[d] > 1 && npos[d] < size[d] &&
                (donor == 3 || size[d] - npos[d] > size[donor] - npos[donor])) {
                donor = d;
            }
        }
        if (donor != 3) shift(s, donor);
    }

    DatasetSplit out;
    out.seed = seed;
    std::array<std::vector<std::string>*, 3> dst{&out.train, &out.val, &out.test};
    std::size_t pi = 0, ni = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t k = 0; k < npos[s]; ++k) dst[s]->push_back(pos[pi++]);
        for (std::size_t k = npos[s]; k < size[s]; ++k) dst[s]->push_back(neg[ni++]);
        std::shuffle(dst[s]->begin(), dst[s]->end(), rng);
    }
    return out;
}

// --- ROI -------------------------------------------------------------------

const char* to_string(Side side) { return side == Side::left ? "left" : "right"; }

Side side_of(const BoundingBox& box, const ImageDims& dims) {
    return box.center_x() < 0.5 * dims.width ? Side::left : Side::right;
}

RoiSpec compute_roi_spec(std::span<const Annotation> train_annotations, const ImageDims& frame,
                         double margin_px) {
    if (margin_px < 0) throw RoiError("ROI margin must be non-negative");
    if (frame.width < 2 || frame.height < 1) throw RoiError("ROI frame too small");
    std::optional<BoundingBox> env[2];
    std::set<std::string> contributors;
    for (const auto& a : train_annotations) {
        if (!a.consensus) continue;
        for (const auto& b : a.boxes) {
            validate_box(b, "training annotation for " + a.image_id);
            const int s = side_of(b, frame) == Side::left ? 0 : 1;
            env[s] = env[s] ? envelope(*env[s], b) : b;
            contributors.insert(a.image_id);
        }
    }
    for (int s = 0; s < 2; ++s) {
        if (!env[s]) {
            throw RoiError(std::string("no training ACP boxes on the ") + (s == 0 ? "left" : "right") +
                           " side; configure a default ROI (roi.override) instead");
        }
    }
    const BoundingBox image = frame.frame();
    auto grow = [&](const BoundingBox& b) {
        BoundingBox g{std::floor(b.x_min - margin_px), std::floor(b.y_min - margin_px),
                      std::ceil(b.x_max + margin_px), std::ceil(b.y_max + margin_px)};
        return clip_to(g, image);
    };
    RoiSpec spec;
    spec.left = grow(*env[0]);
    spec.right = grow(*env[1]);
    spec.left.x_max = std::min(spec.left.x_max, std::floor(0.5 * frame.width));
    spec.right.x_min = std::max(spec.right.x_min, std::ceil(0.5 * frame.width));
    spec.margin_px = margin_px;
    spec.derived_from.assign(contributors.begin(), contributors.end());
    return spec;
}

CropWindow crop_window(const BoundingBox& rect, const ImageDims& dims) {
    const BoundingBox c = clip_to(rect, dims.frame());
    const int x0 = int(std::floor(c.x_min));
    const int y0 = int(std::floor(c.y_min));
    const int x1 = int(std::ceil(c.x_max));
    const int y1 = int(std::ceil(c.y_max));
    if (x1 <= x0 || y1 <= y0) {
        throw RoiError("ROI " + to_string(rect) + " lies outside the " + std::to_string(dims.width) +
                       "x" + std::to_string(dims.height) + " image");
    }
    return {x0, y0, x1 - x0, y1 - y0};
}

std::array<RoiSample, 2> extract_rois(const PanoramicImage& image, const RoiSpec& spec,
                                      const Annotation& annotation) {
    std::array<RoiSample, 2> out;
    for (int s = 0; s < 2; ++s) {
        const Side side = s == 0 ? Side::left : Side::right;
        const CropWindow win = crop_window(spec.rect(side), image.pixels.dims());
        const BoundingBox roi = win.rect();
        RoiSample& sample = out[std::size_t(s)];
        sample.image_id = image.id;
        sample.side = side;
        sample.window = win;
        sample.raster = image.pixels.crop(win.x0, win.y0, win.width, win.height);
        for (const auto& b : annotation.boxes) {
            const auto inside = intersection(b, roi);
            if (!inside || inside->area() < kMinInsideFraction * b.area()) continue;
            sample.boxes.push_back(win.to_crop(*inside));
        }
    }
    return out;
}

}  // namespace acp
