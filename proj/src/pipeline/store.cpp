#include "acp/pipeline/store.hpp"

#include <fstream>

#include "acp/corpus.hpp"
#include "acp/detector/checkpoint.hpp"

namespace acp::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kAnnotationLog = "annotations.jsonl";
constexpr const char* kReviewLog = "reviews.jsonl";

template <typename F>
void replay(const fs::path& file, F&& on_record) {
    std::ifstream in(file);
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            on_record(json::parse(line));
        } catch (const json::exception& e) {
            throw LoadError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

json to_json(const AnnotationRecord& r) {
    return {{"revision", r.revision}, {"image_id", r.image_id}, {"annotator_id", r.annotator_id},
            {"consensus", r.consensus}, {"boxes", r.boxes}, {"recorded_at", r.recorded_at}};
}

json to_json(const ReviewRecord& r) {
    return {{"revision", r.revision}, {"image_id", r.image_id}, {"detection_index", r.detection_index},
            {"verdict", r.verdict}, {"reviewer", r.reviewer}, {"recorded_at", r.recorded_at}};
}

Store::Store(fs::path dir) : dir_(std::move(dir)) {
    replay(dir_ / kAnnotationLog, [&](const json& j) {
        annotations_.push_back({j.at("revision").get<std::uint64_t>(), j.at("image_id").get<std::string>(),
                                j.at("annotator_id").get<std::string>(), j.at("consensus").get<bool>(),
                                j.at("boxes").get<std::vector<BoundingBox>>(), j.value("recorded_at", "")});
    });
    replay(dir_ / kReviewLog, [&](const json& j) {
        reviews_.push_back({j.at("revision").get<std::uint64_t>(), j.at("image_id").get<std::string>(),
                            j.at("detection_index").get<int>(), j.at("verdict").get<std::string>(),
                            j.at("reviewer").get<std::string>(), j.value("recorded_at", "")});
    });
}

void Store::append_line(const fs::path& file, const std::string& line) {
    fs::create_directories(dir_);
    std::ofstream out(file, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("cannot append to " + file.string());
    out << line << '\n';
    if (!out.flush()) throw std::runtime_error("write failed for " + file.string());
}

std::uint64_t Store::annotation_revision(const std::string& image_id) const {
    std::lock_guard lock(mutex_);
    std::uint64_t rev = 0;
    for (const auto& a : annotations_) {
        if (a.image_id == image_id) rev = std::max(rev, a.revision);
    }
    return rev;
}

std::vector<AnnotationRecord> Store::annotations_for(const std::string& image_id) const {
    std::lock_guard lock(mutex_);
    std::vector<AnnotationRecord> out;
    for (const auto& a : annotations_) {
        if (a.image_id == image_id) out.push_back(a);
    }
    return out;
}

AnnotationRecord Store::append_annotation(AnnotationRecord record, std::uint64_t base_revision) {
    std::lock_guard lock(mutex_);
    std::uint64_t current = 0;
    for (const auto& a : annotations_) {
        if (a.image_id == record.image_id) current = std::max(current, a.revision);
    }
    if (base_revision != current) {
        throw ConflictError("annotation revision conflict: base " + std::to_string(base_revision) + ", current " +
                                std::to_string(current),
                            current);
    }
    record.revision = current + 1;
    record.recorded_at = detector::utc_timestamp();
    append_line(dir_ / kAnnotationLog, to_json(record).dump());
    annotations_.push_back(record);
    return record;
}

ReviewRecord Store::append_review(ReviewRecord record) {
    std::lock_guard lock(mutex_);
    record.revision = reviews_.size() + 1;
    record.recorded_at = detector::utc_timestamp();
    append_line(dir_ / kReviewLog, to_json(record).dump());
    reviews_.push_back(record);
    return record;
}

std::vector<ReviewRecord> Store::reviews_for(const std::string& image_id) const {
    std::lock_guard lock(mutex_);
    std::vector<ReviewRecord> out;
    for (const auto& r : reviews_) {
        if (r.image_id == image_id) out.push_back(r);
    }
    return out;
}

}  // namespace acp::pipeline
