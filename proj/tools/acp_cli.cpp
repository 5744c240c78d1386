// acp: command-line driver for the ACP detection pipeline.
//
//   acp synth    [--n N] [--prevalence P] [--seed S] [--serial]
//   acp prepare  [--seed S] [--margin PX] [--serial]
//   acp train    [--seed S] [--iterations N] [--serial] [--threads T]
//   acp infer    --image ID|PATH [--threshold T] [--out DIR]
//   acp eval     [--threshold T] [--per-side] [--serial]
//   acp serve    [--bind HOST:PORT] [--token TOKEN]
//
// Every command takes --config FILE and --workspace DIR. On failure a single
// JSON line {"error":{"stage","kind","message"}} goes to stderr and the exit
// code is nonzero.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <optional>

#include "acp/detector/checkpoint.hpp"
#include "acp/detector/trainer.hpp"
#include "acp/pipeline/config.hpp"
#include "acp/pipeline/service.hpp"
#include "acp/pipeline/stages.hpp"
#include "acp/png_io.hpp"

using namespace acp;
using namespace acp::pipeline;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::string workspace;
};

PipelineConfig resolve_config(const Common& common) {
    PipelineConfig cfg = common.config_path.empty() ? PipelineConfig{} : load_config(common.config_path);
    apply_env_overrides(cfg);
    if (!common.workspace.empty()) cfg.paths.workspace = common.workspace;
    cfg.validate();
    return cfg;
}

void print_result(const json& j) { std::cout << j.dump() << std::endl; }

int fail(const std::string& stage, const std::string& kind, const std::string& message, int code = 1) {
    std::cerr << json{{"error", {{"stage", stage}, {"kind", kind}, {"message", message}}}}.dump() << std::endl;
    return code;
}

Service* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ACP detection pipeline: synthetic data, training, inference, evaluation, service"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "Pipeline config file (JSON)");
        cmd->add_option("--workspace", common.workspace, "Workspace directory (overrides config and ACP_WORKSPACE)");
    };

    std::optional<std::size_t> n;
    std::optional<double> prevalence, threshold, margin;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    bool serial = false, per_side = false;
    int threads = 0;
    std::string image, out_dir, bind, token;

    auto* synth = app.add_subcommand("synth", "Generate a phantom dataset and manifest");
    add_common(synth);
    synth->add_option("--n", n, "Number of images");
    synth->add_option("--prevalence", prevalence, "Fraction of images with ACP")->check(CLI::Range(0.0, 1.0));
    synth->add_option("--seed", seed, "Master seed");
    synth->add_flag("--serial", serial, "Accepted for uniformity; synth is always single-threaded");

    auto* prepare = app.add_subcommand("prepare", "Split the corpus and derive the ROI spec");
    add_common(prepare);
    prepare->add_option("--seed", seed, "Split seed");
    prepare->add_flag("--serial", serial, "Accepted for uniformity; prepare is always single-threaded");
    prepare->add_option("--margin", margin, "ROI margin in pixels")->check(CLI::NonNegativeNumber);

    auto* train = app.add_subcommand("train", "Train the detector on augmented ROI crops");
    add_common(train);
    train->add_option("--seed", seed, "Training seed (init, order, sampling, augmentation)");
    train->add_option("--iterations", iterations, "SGD steps")->check(CLI::NonNegativeNumber);
    train->add_flag("--serial", serial, "Single-threaded deterministic mode");
    train->add_option("--threads", threads, "Worker threads (0 = all cores)");

    auto* infer = app.add_subcommand("infer", "Detect ACP in one image and write the figure artifacts");
    add_common(infer);
    infer->add_option("--image", image, "Manifest image id or PNG path")->required();
    infer->add_option("--threshold", threshold, "Score threshold")->check(CLI::Range(0.0, 1.0));
    infer->add_option("--out", out_dir, "Output directory (default <workspace>/infer/<id>)");

    auto* eval = app.add_subcommand("eval", "Evaluate the checkpoint on the test split");
    add_common(eval);
    eval->add_option("--threshold", threshold, "Operating threshold")->check(CLI::Range(0.0, 1.0));
    eval->add_flag("--per-side", per_side, "Score left/right ROI crops separately");
    eval->add_flag("--serial", serial, "Single-threaded deterministic mode");
    eval->add_option("--threads", threads, "Worker threads (0 = all cores)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
    add_common(serve);
    serve->add_option("--bind", bind, "host:port (overrides config and ACP_BIND)");
    serve->add_option("--token", token, "Shared auth token (overrides config and ACP_AUTH_TOKEN)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(app.get_subcommands().empty() ? "cli" : app.get_subcommands().front()->get_name(), "usage",
                    e.what(), 2);
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        PipelineConfig cfg = resolve_config(common);

        if (stage == "synth") {
            if (n) cfg.synth.n = *n;
            if (prevalence) cfg.synth.prevalence = *prevalence;
            if (seed) cfg.synth.seed = *seed;
            cfg.validate();
            const Manifest m = run_synth(cfg);
            std::size_t positives = 0;
            for (const auto& img : m.images) positives += m.has_acp(img.id);
            print_result({{"stage", stage}, {"manifest", cfg.paths.manifest_path().string()},
                          {"images", m.images.size()}, {"positives", positives}});
        } else if (stage == "prepare") {
            if (seed) cfg.split.seed = *seed;
            if (margin) cfg.roi.margin_px = *margin;
            const PrepareResult r = run_prepare(cfg);
            json roi;
            acp::to_json(roi, r.roi_spec);
            print_result({{"stage", stage},
                          {"split", cfg.paths.split_path().string()},
                          {"sizes", {r.split.train.size(), r.split.val.size(), r.split.test.size()}},
                          {"roi_spec", roi}});
        } else if (stage == "train") {
            if (seed) cfg.detector.seed = *seed;
            if (iterations) cfg.detector.iterations = *iterations;
            TrainStageOptions opts;
            opts.serial = serial;
            opts.threads = threads;
            opts.on_record = [](const detector::StepRecord& r) {
                if (r.split == "val" || r.step % 50 == 0) {
                    std::cerr << "step " << r.step << " " << r.split << " total=" << r.losses.total << "\n";
                }
            };
            const detector::Checkpoint ckpt = run_train(cfg, opts);
            print_result({{"stage", stage},
                          {"checkpoint", cfg.paths.checkpoint_path().string()},
                          {"loss_curve", cfg.paths.loss_curve_path().string()},
                          {"iterations_run", ckpt.metadata.iterations_run},
                          {"best_step", ckpt.metadata.best_step},
                          {"final_total_loss", ckpt.metadata.final_losses.total}});
        } else if (stage == "infer") {
            const detector::Network net = load_stage_checkpoint(cfg).to_network();
            RoiSpec spec;
            if (cfg.roi.override_spec) {
                spec = *cfg.roi.override_spec;
            } else {
                if (!std::filesystem::exists(cfg.paths.roi_spec_path())) {
                    throw MissingInputError("ROI spec not found: " + cfg.paths.roi_spec_path().string() +
                                            " (run prepare first)");
                }
                spec = load_roi_spec(cfg.paths.roi_spec_path());
            }
            const PanoramicImage img = resolve_image(cfg, image);
            const std::filesystem::path out =
                out_dir.empty() ? cfg.paths.workspace / "infer" / img.id : std::filesystem::path(out_dir);
            const InferArtifacts a = run_infer(cfg, net, spec, img, threshold.value_or(cfg.eval.threshold), out);
            print_result({{"stage", stage},
                          {"image_id", img.id},
                          {"detections", a.detections.detections.size()},
                          {"image_score", a.detections.image_score},
                          {"original", a.original.string()},
                          {"roi_left", a.roi_left.string()},
                          {"roi_right", a.roi_right.string()},
                          {"overlay", a.overlay.string()},
                          {"detections_json", a.detections_json.string()}});
        } else if (stage == "eval") {
            if (per_side) cfg.eval.per_side = true;
            const detector::Network net = load_stage_checkpoint(cfg).to_network();
            EvalStageOptions opts;
            opts.threshold = threshold;
            opts.serial = serial;
            opts.threads = threads;
            const EvalReport r = run_eval(cfg, net, opts);
            json summary = {{"stage", stage},
                            {"report", cfg.paths.report_path().string()},
                            {"roc_plot", cfg.paths.roc_plot_path().string()},
                            {"auc", r.auc},
                            {"n", r.scored.size()}};
            if (r.confusion.sensitivity) summary["sensitivity"] = *r.confusion.sensitivity;
            if (r.confusion.specificity) summary["specificity"] = *r.confusion.specificity;
            if (r.localization_rate) summary["localization_rate"] = *r.localization_rate;
            print_result(summary);
        } else if (stage == "serve") {
            if (!bind.empty()) cfg.service.bind = bind;
            if (!token.empty()) cfg.service.auth_token = token;
            const auto [host, port] = Service::parse_bind(cfg.service.bind);
            Service service(cfg);
            const int bound = service.bind(host, port);
            if (bound < 0) return fail(stage, "bind_error", "cannot bind " + cfg.service.bind);
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            print_result({{"stage", stage}, {"listening", host + ":" + std::to_string(bound)}});
            service.run();
            g_service = nullptr;
        }
    } catch (const ConfigError& e) {
        return fail(stage, "config_error", e.what());
    } catch (const MissingInputError& e) {
        return fail(stage, "missing_input", e.what());
    } catch (const detector::CheckpointError& e) {
        return fail(stage, "checkpoint_error", e.what());
    } catch (const detector::NonFiniteLossError& e) {
        return fail(stage, "non_finite_loss", e.what());
    } catch (const ValidationError& e) {
        return fail(stage, "validation_error", e.what());
    } catch (const LoadError& e) {
        return fail(stage, "load_error", e.what());
    } catch (const ImageIoError& e) {
        return fail(stage, "image_error", e.what());
    } catch (const SplitError& e) {
        return fail(stage, "split_error", e.what());
    } catch (const RoiError& e) {
        return fail(stage, "roi_error", e.what());
    } catch (const StatsError& e) {
        return fail(stage, "stats_error", e.what());
    } catch (const std::exception& e) {
        return fail(stage, "error", e.what());
    }
    return 0;
}
