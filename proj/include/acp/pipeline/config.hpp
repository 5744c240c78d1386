#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "acp/augment.hpp"
#include "acp/corpus.hpp"
#include "acp/detector/config.hpp"

namespace acp::pipeline {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Where every stage reads and writes. Empty paths resolve under `workspace`.
struct Paths {
    std::filesystem::path workspace = "workspace";
    std::filesystem::path manifest;    // default: <workspace>/manifest.json
    std::filesystem::path split;       // default: <workspace>/split.json
    std::filesystem::path roi_spec;    // default: <workspace>/roi_spec.json
    std::filesystem::path checkpoint;  // default: <workspace>/model/checkpoint.acpw
    std::filesystem::path loss_curve;  // default: <workspace>/model/loss_curve.csv
    std::filesystem::path report;      // default: <workspace>/eval/report.json
    std::filesystem::path roc_plot;    // default: <workspace>/eval/roc.png
    std::filesystem::path store;       // default: <workspace>/store

    std::filesystem::path manifest_path() const;
    std::filesystem::path split_path() const;
    std::filesystem::path roi_spec_path() const;
    std::filesystem::path checkpoint_path() const;
    std::filesystem::path loss_curve_path() const;
    std::filesystem::path report_path() const;
    std::filesystem::path roc_plot_path() const;
    std::filesystem::path store_path() const;
};

struct SynthSettings {
    std::size_t n = 65;
    double prevalence = 0.67;
    std::uint64_t seed = 0;
    int width = 640;
    int height = 320;
    double noise_level = 0.3;
    double confuser_probability = 0.5;
};

struct SplitSettings {
    std::array<double, 3> fractions{0.7, 0.1, 0.2};
    std::uint64_t seed = 0;
};

struct RoiSettings {
    double margin_px = 25.0;
    std::optional<RoiSpec> override_spec;  // used instead of the derived spec when set
};

struct EvalSettings {
    double threshold = 0.5;
    bool per_side = false;     // score each ROI crop as its own sample
    double localization_iou = 0.5;
};

struct ServiceSettings {
    std::string bind = "127.0.0.1:8080";
    std::string auth_token;  // empty: no auth
};

struct PipelineConfig {
    Paths paths;
    SynthSettings synth;
    SplitSettings split;
    RoiSettings roi;
    AugmentConfig augment;
    detector::DetectorConfig detector;
    EvalSettings eval;
    ServiceSettings service;

    /// Throws ConfigError on the first out-of-range value.
    void validate() const;
};

nlohmann::json to_json(const PipelineConfig& config);

/// Missing keys keep their defaults; unknown keys and mistyped values are
/// rejected with ConfigError naming the key path.
PipelineConfig config_from_json(const nlohmann::json& j);

PipelineConfig load_config(const std::filesystem::path& path);

/// Environment overrides, applied after the file:
///   ACP_WORKSPACE, ACP_MANIFEST, ACP_CHECKPOINT, ACP_STORE, ACP_BIND, ACP_AUTH_TOKEN
/// `getenv` is injectable for tests.
void apply_env_overrides(PipelineConfig& config,
                         const std::function<const char*(const char*)>& getenv = nullptr);

}  // namespace acp::pipeline
