#pragma once

#include <memory>
#include <string>

#include "acp/pipeline/config.hpp"

namespace acp::pipeline {

/// HTTP/JSON front end over the workspace: image listing and PNGs,
/// annotations with revision checks, inference, reviews and the latest report.
///
///   GET  /api/images                  manifest listing
///   GET  /api/images/{id}             PNG bytes as stored
///   GET  /api/annotations/{image_id}  consensus + per-annotator boxes, revision
///   POST /api/annotations/{image_id}  {annotator_id, boxes, consensus?, base_revision}
///   POST /api/infer                   {image_id, threshold?}
///   POST /api/reviews                 {image_id, detection_index, verdict, reviewer}
///   GET  /api/reviews/{image_id}      reviews recorded for an image
///   GET  /api/report                  latest evaluation report
///
/// Errors are JSON {"error": message} with 400/401/404/409/422.
class Service {
public:
    explicit Service(PipelineConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void run();
    /// Blocks until run() is accepting connections.
    void wait_until_ready() const;
    void stop();

    /// Splits "host:port"; throws ConfigError on a malformed address.
    static std::pair<std::string, int> parse_bind(const std::string& address);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace acp::pipeline
