#include "acp/pipeline/service.hpp"

#include <httplib.h>

#include <filesystem>
#include <shared_mutex>

#include "acp/corpus.hpp"
#include "acp/detector/checkpoint.hpp"
#include "acp/detector/inference.hpp"
#include "acp/pipeline/stages.hpp"
#include "acp/pipeline/store.hpp"

namespace acp::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    send_json(res, status, extra);
}

/// Request body as a JSON object, or nullopt after answering 400.
std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) {
            send_error(res, 400, "request body must be a JSON object");
            return std::nullopt;
        }
        return j;
    } catch (const json::parse_error&) {
        send_error(res, 400, "request body is not valid JSON");
        return std::nullopt;
    }
}

json box_list(const std::vector<BoundingBox>& boxes) {
    json out = json::array();
    for (const auto& b : boxes) {
        json j;
        acp::to_json(j, b);
        out.push_back(j);
    }
    return out;
}

}  // namespace

struct Service::Impl {
    PipelineConfig config;
    Store store;
    httplib::Server server;

    std::shared_mutex model_mutex;
    std::shared_ptr<const detector::Network> model;
    fs::file_time_type model_mtime{};

    explicit Impl(PipelineConfig c) : config(std::move(c)), store(config.paths.store_path()) {}

    Manifest manifest() const {
        const fs::path path = config.paths.manifest_path();
        if (!fs::exists(path)) return {};
        return load_manifest(path);
    }

    /// Current checkpoint, reloaded when the file changes; null when absent.
    std::shared_ptr<const detector::Network> network() {
        const fs::path path = config.paths.checkpoint_path();
        std::error_code ec;
        const auto mtime = fs::last_write_time(path, ec);
        if (ec) return nullptr;
        {
            std::shared_lock lock(model_mutex);
            if (model && mtime == model_mtime) return model;
        }
        std::unique_lock lock(model_mutex);
        if (!model || mtime != model_mtime) {
            model = std::make_shared<const detector::Network>(detector::load_checkpoint(path).to_network());
            model_mtime = mtime;
        }
        return model;
    }

    json annotation_view(const Manifest& m, const std::string& image_id) const {
        json annotators = json::array();
        json consensus = {{"boxes", json::array()}, {"annotator_ids", json::array()}, {"revision", 0},
                          {"source", "manifest"}};
        for (const auto& a : m.annotations) {
            if (a.image_id != image_id) continue;
            if (a.consensus) {
                consensus = {{"boxes", box_list(a.boxes)}, {"annotator_ids", a.annotator_ids}, {"revision", 0},
                             {"source", "manifest"}};
            } else {
                for (const auto& who : a.annotator_ids) {
                    annotators.push_back({{"annotator_id", who}, {"boxes", box_list(a.boxes)}, {"revision", 0}});
                }
            }
        }
        const auto records = store.annotations_for(image_id);
        std::uint64_t revision = 0;
        for (const auto& r : records) {
            revision = std::max(revision, r.revision);
            const json entry = {{"annotator_id", r.annotator_id}, {"boxes", box_list(r.boxes)},
                                {"revision", r.revision}};
            bool replaced = false;
            for (auto& existing : annotators) {
                if (existing["annotator_id"] == r.annotator_id) {
                    existing = entry;
                    replaced = true;
                }
            }
            if (!replaced) annotators.push_back(entry);
            if (r.consensus) {
                consensus = {{"boxes", box_list(r.boxes)}, {"annotator_ids", json::array({r.annotator_id})},
                             {"revision", r.revision}, {"source", "store"}};
            }
        }
        return {{"image_id", image_id}, {"revision", revision}, {"consensus", consensus},
                {"annotators", annotators}};
    }

    void routes() {
        if (!config.service.auth_token.empty()) {
            server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
                const std::string expected = "Bearer " + config.service.auth_token;
                if (req.get_header_value("Authorization") == expected) return httplib::Server::HandlerResponse::Unhandled;
                send_error(res, 401, "missing or wrong auth token");
                return httplib::Server::HandlerResponse::Handled;
            });
        }
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
            send_error(res, res.status, res.status == 404 ? "no such route" : "request failed");
            return httplib::Server::HandlerResponse::Handled;
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            } catch (...) {
                send_error(res, 500, "internal error");
            }
        });

        server.Get("/api/images", [this](const httplib::Request&, httplib::Response& res) {
            const Manifest m = manifest();
            json images = json::array();
            for (const auto& img : m.images) {
                images.push_back({{"id", img.id}, {"width", img.width}, {"height", img.height},
                                  {"device_tag", img.device_tag}, {"has_acp", m.has_acp(img.id)}});
            }
            send_json(res, 200, {{"images", images}});
        });

        server.Get(R"(/api/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const Manifest m = manifest();
            const ImageRecord* rec = m.find_image(req.matches[1]);
            if (!rec) return send_error(res, 404, "unknown image id");
            res.status = 200;
            res.set_content(read_text_file(rec->path), "image/png");
        });

        server.Get(R"(/api/annotations/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const Manifest m = manifest();
            const std::string id = req.matches[1];
            if (!m.find_image(id)) return send_error(res, 404, "unknown image id");
            send_json(res, 200, annotation_view(m, id));
        });

        server.Post(R"(/api/annotations/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const Manifest m = manifest();
            const std::string id = req.matches[1];
            const ImageRecord* rec = m.find_image(id);
            if (!rec) return send_error(res, 404, "unknown image id");
            const auto body = parse_body(req, res);
            if (!body) return;

            AnnotationRecord record;
            record.image_id = id;
            std::uint64_t base = 0;
            try {
                record.annotator_id = body->at("annotator_id").get<std::string>();
                record.consensus = body->value("consensus", false);
                base = body->at("base_revision").get<std::uint64_t>();
                for (const auto& b : body->at("boxes")) record.boxes.push_back(b.get<BoundingBox>());
            } catch (const json::exception&) {
                return send_error(res, 422,
                                  "expected {annotator_id: string, boxes: [{x_min,y_min,x_max,y_max}], "
                                  "consensus?: bool, base_revision: integer}");
            }
            if (record.annotator_id.empty()) return send_error(res, 422, "annotator_id must not be empty");
            const BoundingBox frame{0, 0, double(rec->width), double(rec->height)};
            for (std::size_t i = 0; i < record.boxes.size(); ++i) {
                const BoundingBox& b = record.boxes[i];
                if (!b.valid()) {
                    return send_error(res, 422, "box " + std::to_string(i) + " needs x_min < x_max and y_min < y_max",
                                      {{"box_index", i}});
                }
                if (!frame.contains(b)) {
                    return send_error(res, 422, "box " + std::to_string(i) + " lies outside the image",
                                      {{"box_index", i}});
                }
            }
            try {
                const AnnotationRecord stored = store.append_annotation(record, base);
                send_json(res, 200, {{"stored", to_json(stored)}, {"annotation", annotation_view(m, id)}});
            } catch (const ConflictError& e) {
                send_error(res, 409, e.what(),
                           {{"current_revision", e.current_revision()}, {"annotation", annotation_view(m, id)}});
            }
        });

        server.Post("/api/infer", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req, res);
            if (!body) return;
            std::string id;
            double threshold = config.eval.threshold;
            try {
                id = body->at("image_id").get<std::string>();
                if (body->contains("threshold")) threshold = body->at("threshold").get<double>();
            } catch (const json::exception&) {
                return send_error(res, 422, "expected {image_id: string, threshold?: number}");
            }
            if (!(threshold >= 0 && threshold <= 1)) return send_error(res, 422, "threshold must be in [0,1]");
            const Manifest m = manifest();
            const ImageRecord* rec = m.find_image(id);
            if (!rec) return send_error(res, 404, "unknown image id");
            const auto net = network();
            if (!net) return send_error(res, 409, "no checkpoint");
            RoiSpec spec;
            if (config.roi.override_spec) {
                spec = *config.roi.override_spec;
            } else if (fs::exists(config.paths.roi_spec_path())) {
                spec = load_roi_spec(config.paths.roi_spec_path());
            } else {
                return send_error(res, 409, "no ROI spec");
            }
            const PanoramicImage image = load_image(*rec);
            const auto detections = detector::detect_image(*net, image, spec, threshold);
            send_json(res, 200, detector::to_json(detections, threshold));
        });

        server.Post("/api/reviews", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req, res);
            if (!body) return;
            ReviewRecord r;
            try {
                r.image_id = body->at("image_id").get<std::string>();
                r.detection_index = body->at("detection_index").get<int>();
                r.verdict = body->at("verdict").get<std::string>();
                r.reviewer = body->at("reviewer").get<std::string>();
            } catch (const json::exception&) {
                return send_error(res, 422,
                                  "expected {image_id: string, detection_index: integer, "
                                  "verdict: accepted|rejected, reviewer: string}");
            }
            if (r.verdict != "accepted" && r.verdict != "rejected") {
                return send_error(res, 422, "verdict must be \"accepted\" or \"rejected\"");
            }
            if (r.detection_index < 0) return send_error(res, 422, "detection_index must be >= 0");
            if (r.reviewer.empty()) return send_error(res, 422, "reviewer must not be empty");
            if (!manifest().find_image(r.image_id)) return send_error(res, 404, "unknown image id");
            send_json(res, 201, to_json(store.append_review(r)));
        });

        server.Get(R"(/api/reviews/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            if (!manifest().find_image(id)) return send_error(res, 404, "unknown image id");
            json out = json::array();
            for (const auto& r : store.reviews_for(id)) out.push_back(to_json(r));
            send_json(res, 200, {{"image_id", id}, {"reviews", out}});
        });

        server.Get("/api/report", [this](const httplib::Request&, httplib::Response& res) {
            const fs::path path = config.paths.report_path();
            if (!fs::exists(path)) return send_error(res, 404, "no evaluation report yet");
            res.status = 200;
            res.set_content(read_text_file(path), "application/json");
        });
    }
};

Service::Service(PipelineConfig config) : impl_(std::make_unique<Impl>(std::move(config))) { impl_->routes(); }

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    if (!impl_->server.bind_to_port(host, port)) return -1;
    return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

std::pair<std::string, int> Service::parse_bind(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("bind address must be host:port, got " + address);
    try {
        std::size_t used = 0;
        const int port = std::stoi(address.substr(colon + 1), &used);
        if (used != address.size() - colon - 1 || port < 0 || port > 65535) throw std::invalid_argument("port");
        return {address.substr(0, colon), port};
    } catch (const std::exception&) {
        throw ConfigError("bind address must be host:port, got " + address);
    }
}

}  // namespace acp::pipeline
