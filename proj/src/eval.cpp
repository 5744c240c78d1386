#include "acp/eval.hpp"

#include <algorithm>
#include <cmath>

namespace acp {

using nlohmann::json;

double image_level_score(std::span<const double> confidences) {
    if (confidences.empty()) return 0.0;
    return *std::max_element(confidences.begin(), confidences.end());
}

Confusion confusion_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    Confusion c{tp, fp, tn, fn, std::nullopt, std::nullopt, std::nullopt};
    if (tp + fn > 0) c.sensitivity = double(tp) / double(tp + fn);
    if (tn + fp > 0) c.specificity = double(tn) / double(tn + fp);
    if (c.total() > 0) c.accuracy = double(tp + tn) / double(c.total());
    return c;
}

Confusion confusion_at(std::span<const ScoredImage> scored, double threshold) {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& s : scored) {
        const bool predicted = s.score >= threshold;
        if (s.label) {
            (predicted ? tp : fn)++;
        } else {
            (predicted ? fp : tn)++;
        }
    }
    return confusion_from_counts(tp, fp, tn, fn);
}

std::vector<RocPoint> roc_curve(std::span<const ScoredImage> scored) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& s : scored) (s.label ? n_pos : n_neg)++;

    std::vector<const ScoredImage*> order;
    order.reserve(scored.size());
    for (const auto& s : scored) order.push_back(&s);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->score > b->score; });

    auto rate = [](std::size_t k, std::size_t n) { return n == 0 ? 0.0 : double(k) / double(n); };
    std::vector<RocPoint> points{{0.0, 0.0}};
    std::size_t tp = 0, fp = 0;
    // Sweep thresholds from high to low; all items sharing a score flip together.
    for (std::size_t i = 0; i < order.size();) {
        const double t = order[i]->score;
        while (i < order.size() && order[i]->score == t) {
            (order[i]->label ? tp : fp)++;
            ++i;
        }
        points.emplace_back(rate(fp, n_neg), rate(tp, n_pos));
    }
    points.emplace_back(1.0, 1.0);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return points;
}

double auc(std::span<const RocPoint> roc) {
    if (roc.size() < 2) return 0.5;
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        area += (roc[i].first - roc[i - 1].first) * 0.5 * (roc[i].second + roc[i - 1].second);
    }
    return std::clamp(area, 0.0, 1.0);
}

double hanley_mcneil_se(double area, std::size_t n_pos, std::size_t n_neg) {
    const double q1 = area / (2.0 - area);
    const double q2 = 2.0 * area * area / (1.0 + area);
    const double a2 = area * area;
    const double var = (area * (1.0 - area) + (double(n_pos) - 1.0) * (q1 - a2) +
                        (double(n_neg) - 1.0) * (q2 - a2)) /
                       (double(n_pos) * double(n_neg));
    return std::sqrt(std::max(0.0, var));
}

AucInference auc_inference(double area, std::size_t n_pos, std::size_t n_neg) {
    if (n_pos == 0 || n_neg == 0) {
        throw StatsError("AUC inference needs at least one positive and one negative");
    }
    if (!(area >= 0.0 && area <= 1.0)) throw StatsError("AUC must be in [0, 1]");
    AucInference r;
    r.se = hanley_mcneil_se(area, n_pos, n_neg);
    r.se_null = hanley_mcneil_se(0.5, n_pos, n_neg);
    r.ci95 = {std::clamp(area - 1.96 * r.se, 0.0, 1.0), std::clamp(area + 1.96 * r.se, 0.0, 1.0)};
    r.z = (area - 0.5) / r.se_null;
    r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
    return r;
}

EvalReport build_report(std::vector<ScoredImage> scored, double threshold) {
    if (scored.empty()) throw StatsError("cannot evaluate an empty test set");
    EvalReport r;
    r.threshold = threshold;
    r.confusion = confusion_at(scored, threshold);
    for (const auto& s : scored) (s.label ? r.positives : r.negatives)++;
    r.roc_points = roc_curve(scored);
    r.auc = auc(r.roc_points);
    if (r.positives > 0 && r.negatives > 0) r.inference = auc_inference(r.auc, r.positives, r.negatives);
    r.scored = std::move(scored);
    return r;
}

json to_json(const EvalReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["threshold"] = r.threshold;
    j["tp"] = r.confusion.tp;
    j["fp"] = r.confusion.fp;
    j["tn"] = r.confusion.tn;
    j["fn"] = r.confusion.fn;
    j["positives"] = r.positives;
    j["negatives"] = r.negatives;
    j["sensitivity"] = opt(r.confusion.sensitivity);
    j["specificity"] = opt(r.confusion.specificity);
    j["accuracy"] = opt(r.confusion.accuracy);
    json roc = json::array();
    for (const auto& [fpr, tpr] : r.roc_points) roc.push_back({fpr, tpr});
    j["roc_points"] = roc;
    j["auc"] = r.auc;
    if (r.inference) {
        j["auc_se"] = r.inference->se;
        j["ci95"] = {r.inference->ci95.first, r.inference->ci95.second};
        j["z"] = r.inference->z;
        j["p_value"] = r.inference->p_value;
    } else {
        j["auc_se"] = nullptr;
        j["ci95"] = nullptr;
        j["z"] = nullptr;
        j["p_value"] = nullptr;
    }
    j["localization_rate"] = opt(r.localization_rate);
    json images = json::array();
    for (const auto& s : r.scored) images.push_back({{"image_id", s.image_id}, {"score", s.score}, {"label", s.label}});
    j["images"] = images;
    return j;
}

}  // namespace acp
