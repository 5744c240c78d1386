#include "acp/pipeline/config.hpp"

#include <cmath>
#include <cstdlib>
#include <type_traits>

namespace acp::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path or_default(const fs::path& set, const fs::path& workspace, const char* rel) {
    return set.empty() ? workspace / rel : set;
}

json box_json(const BoundingBox& b) {
    json j;
    acp::to_json(j, b);
    return j;
}

void reject_unknown(const json& j, const json& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown key \"" + (where.empty() ? key : where + "." + key) + "\"");
    }
}

template <typename T>
void read(const json& j, const char* key, T& field, const std::string& where) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        // nlohmann would truncate 2.5 and wrap -1 into an unsigned field
        const bool ok = v.is_number_unsigned() ||
                        (v.is_number_integer() && (!std::is_unsigned_v<T> || v.get<std::int64_t>() >= 0));
        if (!ok) {
            throw ConfigError("config key \"" + where + "." + key + "\" must be a" +
                              (std::is_unsigned_v<T> ? " non-negative" : "n") + " integer");
        }
    }
    try {
        field = v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key \"" + where + "." + key + "\" has the wrong type");
    }
}

void read_path(const json& j, const char* key, fs::path& field) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_string()) throw ConfigError(std::string("config key \"paths.") + key + "\" must be a string");
    field = j.at(key).get<std::string>();
}

}  // namespace

fs::path Paths::manifest_path() const { return or_default(manifest, workspace, "manifest.json"); }
fs::path Paths::split_path() const { return or_default(split, workspace, "split.json"); }
fs::path Paths::roi_spec_path() const { return or_default(roi_spec, workspace, "roi_spec.json"); }
fs::path Paths::checkpoint_path() const { return or_default(checkpoint, workspace, "model/checkpoint.acpw"); }
fs::path Paths::loss_curve_path() const { return or_default(loss_curve, workspace, "model/loss_curve.csv"); }
fs::path Paths::report_path() const { return or_default(report, workspace, "eval/report.json"); }
fs::path Paths::roc_plot_path() const { return or_default(roc_plot, workspace, "eval/roc.png"); }
fs::path Paths::store_path() const { return or_default(store, workspace, "store"); }

void PipelineConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(!paths.workspace.empty(), "paths.workspace must not be empty");
    require(synth.n <= 100000, "synth.n must be <= 100000");
    require(synth.prevalence >= 0 && synth.prevalence <= 1, "synth.prevalence must be in [0,1]");
    require(synth.width >= 32 && synth.height >= 32, "synth.width and synth.height must be >= 32");
    require(synth.noise_level >= 0 && synth.noise_level <= 1, "synth.noise_level must be in [0,1]");
    require(synth.confuser_probability >= 0 && synth.confuser_probability <= 1,
            "synth.confuser_probability must be in [0,1]");
    double sum = 0;
    for (double f : split.fractions) {
        require(f >= 0, "split.fractions must be non-negative");
        sum += f;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "split.fractions must sum to 1");
    require(roi.margin_px >= 0, "roi.margin_px must be non-negative");
    if (roi.override_spec) {
        require(roi.override_spec->left.valid() && roi.override_spec->right.valid(),
                "roi.override boxes must satisfy min < max");
        require(!intersection(roi.override_spec->left, roi.override_spec->right),
                "roi.override left and right must be disjoint");
    }
    try {
        augment.validate();
        detector.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    require(eval.threshold >= 0 && eval.threshold <= 1, "eval.threshold must be in [0,1]");
    require(eval.localization_iou > 0 && eval.localization_iou <= 1, "eval.localization_iou must be in (0,1]");
}

json to_json(const PipelineConfig& c) {
    json roi_override = nullptr;
    if (c.roi.override_spec) {
        roi_override = {{"left", box_json(c.roi.override_spec->left)}, {"right", box_json(c.roi.override_spec->right)}};
    }
    return {
        {"paths",
         {{"workspace", c.paths.workspace.string()},
          {"manifest", c.paths.manifest.string()},
          {"split", c.paths.split.string()},
          {"roi_spec", c.paths.roi_spec.string()},
          {"checkpoint", c.paths.checkpoint.string()},
          {"loss_curve", c.paths.loss_curve.string()},
          {"report", c.paths.report.string()},
          {"roc_plot", c.paths.roc_plot.string()},
          {"store", c.paths.store.string()}}},
        {"synth",
         {{"n", c.synth.n},
          {"prevalence", c.synth.prevalence},
          {"seed", c.synth.seed},
          {"width", c.synth.width},
          {"height", c.synth.height},
          {"noise_level", c.synth.noise_level},
          {"confuser_probability", c.synth.confuser_probability}}},
        {"split", {{"fractions", c.split.fractions}, {"seed", c.split.seed}}},
        {"roi", {{"margin_px", c.roi.margin_px}, {"override", roi_override}}},
        {"augment",
         {{"brightness_range", {c.augment.brightness_range.first, c.augment.brightness_range.second}},
          {"angle_range", {c.augment.angle_range.first, c.augment.angle_range.second}},
          {"per_sample_count", c.augment.per_sample_count},
          {"flip_probability", c.augment.flip_probability}}},
        {"detector", detector::to_json(c.detector)},
        {"eval",
         {{"threshold", c.eval.threshold}, {"per_side", c.eval.per_side},
          {"localization_iou", c.eval.localization_iou}}},
        {"service", {{"bind", c.service.bind}, {"auth_token", c.service.auth_token}}},
    };
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    const json known = to_json(c);
    reject_unknown(j, known, "");

    if (j.contains("paths")) {
        const json& p = j.at("paths");
        reject_unknown(p, known.at("paths"), "paths");
        read_path(p, "workspace", c.paths.workspace);
        read_path(p, "manifest", c.paths.manifest);
        read_path(p, "split", c.paths.split);
        read_path(p, "roi_spec", c.paths.roi_spec);
        read_path(p, "checkpoint", c.paths.checkpoint);
        read_path(p, "loss_curve", c.paths.loss_curve);
        read_path(p, "report", c.paths.report);
        read_path(p, "roc_plot", c.paths.roc_plot);
        read_path(p, "store", c.paths.store);
    }
    if (j.contains("synth")) {
        const json& s = j.at("synth");
        reject_unknown(s, known.at("synth"), "synth");
        read(s, "n", c.synth.n, "synth");
        read(s, "prevalence", c.synth.prevalence, "synth");
        read(s, "seed", c.synth.seed, "synth");
        read(s, "width", c.synth.width, "synth");
        read(s, "height", c.synth.height, "synth");
        read(s, "noise_level", c.synth.noise_level, "synth");
        read(s, "confuser_probability", c.synth.confuser_probability, "synth");
    }
    if (j.contains("split")) {
        const json& s = j.at("split");
        reject_unknown(s, known.at("split"), "split");
        read(s, "fractions", c.split.fractions, "split");
        read(s, "seed", c.split.seed, "split");
    }
    if (j.contains("roi")) {
        const json& r = j.at("roi");
        reject_unknown(r, known.at("roi"), "roi");
        read(r, "margin_px", c.roi.margin_px, "roi");
        if (r.contains("override") && !r.at("override").is_null()) {
            const json& o = r.at("override");
            reject_unknown(o, json{{"left", 0}, {"right", 0}}, "roi.override");
            try {
                RoiSpec spec;
                spec.left = o.at("left").get<BoundingBox>();
                spec.right = o.at("right").get<BoundingBox>();
                spec.margin_px = 0;
                c.roi.override_spec = spec;
            } catch (const json::exception&) {
                throw ConfigError("roi.override needs left and right boxes {x_min,y_min,x_max,y_max}");
            }
        }
    }
    if (j.contains("augment")) {
        const json& a = j.at("augment");
        reject_unknown(a, known.at("augment"), "augment");
        read(a, "brightness_range", c.augment.brightness_range, "augment");
        read(a, "angle_range", c.augment.angle_range, "augment");
        read(a, "per_sample_count", c.augment.per_sample_count, "augment");
        read(a, "flip_probability", c.augment.flip_probability, "augment");
    }
    if (j.contains("detector")) {
        try {
            c.detector = detector::detector_config_from_json(j.at("detector"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        } catch (const json::exception& e) {
            throw ConfigError(std::string("detector: ") + e.what());
        }
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown(e, known.at("eval"), "eval");
        read(e, "threshold", c.eval.threshold, "eval");
        read(e, "per_side", c.eval.per_side, "eval");
        read(e, "localization_iou", c.eval.localization_iou, "eval");
    }
    if (j.contains("service")) {
        const json& s = j.at("service");
        reject_unknown(s, known.at("service"), "service");
        read(s, "bind", c.service.bind, "service");
        read(s, "auth_token", c.service.auth_token, "service");
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception&) {
        throw ConfigError("cannot read config file " + path.string());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

void apply_env_overrides(PipelineConfig& config, const std::function<const char*(const char*)>& getenv) {
    auto get = [&](const char* name) -> const char* {
        return getenv ? getenv(name) : std::getenv(name);
    };
    if (const char* v = get("ACP_WORKSPACE"); v && *v) config.paths.workspace = v;
    if (const char* v = get("ACP_MANIFEST"); v && *v) config.paths.manifest = v;
    if (const char* v = get("ACP_CHECKPOINT"); v && *v) config.paths.checkpoint = v;
    if (const char* v = get("ACP_STORE"); v && *v) config.paths.store = v;
    if (const char* v = get("ACP_BIND"); v && *v) config.service.bind = v;
    if (const char* v = get("ACP_AUTH_TOKEN"); v) config.service.auth_token = v;
}

}  // namespace acp::pipeline
