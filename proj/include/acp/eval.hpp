#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace acp {

struct ScoredImage {
    std::string image_id;
    double score = 0.0;  // max detection confidence, 0 without detections
    bool label = false;  // has ACP per consensus annotation
};

/// Max confidence, or 0 for an empty list.
double image_level_score(std::span<const double> confidences);

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    // Empty when the denominator is zero.
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> accuracy;

    std::size_t total() const { return tp + fp + tn + fn; }
};

/// Metrics from raw counts.
Confusion confusion_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

/// Positive prediction iff score >= threshold.
Confusion confusion_at(std::span<const ScoredImage> scored, double threshold);

using RocPoint = std::pair<double, double>;  // (fpr, tpr)

/// One point per distinct score threshold plus the (0,0) and (1,1) sentinels,
/// ordered by fpr then tpr.
std::vector<RocPoint> roc_curve(std::span<const ScoredImage> scored);

/// Trapezoidal area; curves without two points count as chance (0.5).
double auc(std::span<const RocPoint> roc);

class StatsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct AucInference {
    double se = 0.0;                   // Hanley-McNeil at the observed area
    double se_null = 0.0;              // Hanley-McNeil at area 0.5
    std::pair<double, double> ci95{};  // auc +- 1.96 se, clamped to [0,1]
    double z = 0.0;
    double p_value = 1.0;              // two-sided, H0: area = 0.5
};

/// Hanley-McNeil standard error of an AUC from n_pos positives and n_neg negatives.
double hanley_mcneil_se(double area, std::size_t n_pos, std::size_t n_neg);

/// Throws StatsError when either class is empty.
AucInference auc_inference(double area, std::size_t n_pos, std::size_t n_neg);

struct EvalReport {
    double threshold = 0.5;
    Confusion confusion;
    std::size_t positives = 0, negatives = 0;
    std::vector<RocPoint> roc_points;
    double auc = 0.5;
    std::optional<AucInference> inference;  // absent when a class is missing
    std::vector<ScoredImage> scored;
    // Synthetic-harness extra: fraction of positives with a detection at or
    // above threshold overlapping a ground-truth box at IoU >= 0.5.
    std::optional<double> localization_rate;
};

/// Composes the confusion, ROC, AUC and inference from scored images.
/// Throws StatsError for an empty set.
EvalReport build_report(std::vector<ScoredImage> scored, double threshold);

nlohmann::json to_json(const EvalReport& report);

}  // namespace acp
