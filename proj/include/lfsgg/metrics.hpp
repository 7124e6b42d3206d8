#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "lfsgg/graph.hpp"
#include "lfsgg/matcher.hpp"

namespace lfsgg {

struct EvalOptions {
    std::vector<int> ks{20, 50, 100};
    MatchConfig match;
    bool with_precision = true; // also compute full-graph precision/recall/F1
    int jobs = 1;               // worker threads for per-image fan-out
};

struct ImageEval {
    std::string image_id;
    std::vector<std::pair<int, double>> recall_at; // (k, recall) in the order of EvalOptions::ks
    std::optional<double> precision;               // full graphs, prediction deduplicated
    std::optional<double> recall;
    std::optional<double> f1;
    double matcher_time_ms = 0.0;
};

struct EvalReport {
    std::vector<ImageEval> per_image; // ascending image_id
    std::vector<std::pair<int, double>> aggregate_recall_at; // macro average per k
    std::optional<double> precision; // macro averages; f1 is the harmonic mean
    std::optional<double> recall;    // of the aggregate precision and recall
    std::optional<double> f1;
};

// Recall of gt against the prediction truncated to its top-k unique
// quintuples: the matcher runs on the truncated pair and the denominator is
// |gt|. Returns 1.0 for empty gt. Matching is re-run per k; reusing one
// mapping across cutoffs could under-credit small slices.
double recall_at_k(const SceneGraph& gt, const SceneGraph& pred, int k, const MatchConfig& cfg);

// Full-graph precision/recall/F1. The prediction is deduplicated first so a
// repeated quintuple can neither inflate matches nor be penalized twice:
// precision = matched / |unique pred|, recall = matched / |gt|. Conventions:
// both empty -> (1,1,1); empty pred only -> (0,0,0); empty gt only ->
// (0,1,0). F1 is the harmonic mean, 0 when both terms are 0.
std::tuple<double, double, double> precision_recall_f1(const SceneGraph& gt,
                                                       const SceneGraph& pred,
                                                       const MatchConfig& cfg);

// Scores every ground-truth image: predictions are looked up by image_id,
// images without a prediction are scored against an empty graph. Throws
// UnknownImageId for predictions whose image_id has no ground truth and
// ParseError on duplicate ids within either list. Per-image work fans out
// over opts.jobs threads; results are identical for any jobs value.
EvalReport evaluate_dataset(const std::vector<SceneGraph>& gt,
                            const std::vector<SceneGraph>& pred, const EvalOptions& opts);

} // namespace lfsgg
