#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "acp/box.hpp"

namespace acp::pipeline {

/// An annotation write whose base revision is stale.
class ConflictError : public std::runtime_error {
public:
    ConflictError(const std::string& what, std::uint64_t current) : std::runtime_error(what), current_(current) {}
    std::uint64_t current_revision() const { return current_; }

private:
    std::uint64_t current_;
};

struct AnnotationRecord {
    std::uint64_t revision = 0;  // per image, 1-based; 0 is the manifest state
    std::string image_id;
    std::string annotator_id;
    bool consensus = false;
    std::vector<BoundingBox> boxes;
    std::string recorded_at;
};

struct ReviewRecord {
    std::uint64_t revision = 0;  // global sequence, 1-based
    std::string image_id;
    int detection_index = 0;
    std::string verdict;  // "accepted" or "rejected"
    std::string reviewer;
    std::string recorded_at;
};

nlohmann::json to_json(const AnnotationRecord& r);
nlohmann::json to_json(const ReviewRecord& r);

/// Append-only JSONL logs (annotations.jsonl, reviews.jsonl) in one directory.
/// Writes are serialized; existing logs are replayed on construction.
class Store {
public:
    explicit Store(std::filesystem::path dir);

    std::uint64_t annotation_revision(const std::string& image_id) const;
    std::vector<AnnotationRecord> annotations_for(const std::string& image_id) const;

    /// Appends when `base_revision` equals the image's current revision;
    /// throws ConflictError otherwise. The stored record gets base_revision + 1.
    AnnotationRecord append_annotation(AnnotationRecord record, std::uint64_t base_revision);

    ReviewRecord append_review(ReviewRecord record);
    std::vector<ReviewRecord> reviews_for(const std::string& image_id) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    void append_line(const std::filesystem::path& file, const std::string& line);

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::vector<AnnotationRecord> annotations_;
    std::vector<ReviewRecord> reviews_;
};

}  // namespace acp::pipeline
