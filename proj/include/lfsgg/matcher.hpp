#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lfsgg/graph.hpp"

namespace lfsgg {

// An injective, class-consistent partial map from ground-truth instances to
// predicted instances, with the recall it achieves on the full graphs.
// `matched` is recall's numerator: the number of ground-truth quintuples
// whose mapped form is covered by a distinct predicted quintuple.
struct InstanceMapping {
    std::vector<std::pair<EntityInstance, EntityInstance>> pairs; // sorted by ground-truth instance
    double recall = 0.0;
    int matched = 0;
};

struct MatchConfig {
    // Number of top-scoring candidate assignments explored per ground-truth
    // instance. B >= the largest per-class instance count makes the search
    // exhaustive.
    int branching_factor = 3;

    // Score neighborhoods as (predicate, class, out/in) instead of the
    // default (predicate, class).
    bool directed_neighborhood = false;

    // Hard cap on completed tree branches; exceeding it throws
    // BranchBudgetExceeded instead of running away on pathological input.
    std::int64_t max_branches = 1'000'000;

    // Score candidates against the full graphs rather than the graphs with
    // already-consumed instances removed. Off by default: the search removes
    // matched instances level by level and recomputes degrees and
    // neighborhoods on what remains.
    bool static_neighborhoods = false;

    // Collapse duplicate ground-truth quintuples before matching (set
    // semantics). Default keeps the multiset.
    bool dedup_gt = false;
};

// Fraction of gt_nbhd covered by pred_nbhd: multiset-intersection cardinality
// divided by |gt_nbhd|. gt_nbhd must be non-empty.
double overlap_score(const Neighborhood& gt_nbhd, const Neighborhood& pred_nbhd);

// Heuristic tree search. Repeatedly selects the unmapped ground-truth
// instance of highest degree (ties: lower class index, then lower instance
// index), scores the same-class unmapped predicted instances by
// overlap_score, branches on the top B of them (ties: lower instance index),
// and recurses until every ground-truth instance is handled; an instance
// whose class has no unmapped predicted instance left maps to nothing. Among
// all completed mappings the one of highest recall on the full graphs wins,
// ties broken by lexicographically smallest pair list.
InstanceMapping hts_match(const SceneGraph& gt, const SceneGraph& pred, const MatchConfig& cfg = {});

// Enumerates every maximal class-consistent injective mapping and returns
// the recall-best one (same tie-break as hts_match). Throws
// SearchSpaceTooLarge when the product of per-class injection counts exceeds
// 10^7.
InstanceMapping exhaustive_match(const SceneGraph& gt, const SceneGraph& pred, bool dedup_gt = false);

// Contrast baseline: one optimal assignment per class maximizing the sum of
// pairwise overlap scores on the full graphs, with no branch exploration.
// Cannot coordinate choices across classes, which is exactly what the tree
// search exists for.
InstanceMapping first_order_match(const SceneGraph& gt, const SceneGraph& pred, const MatchConfig& cfg = {});

// Relabels predicted instance indices to their matched ground-truth indices.
// Unmatched predicted instances receive fresh indices starting at
// max_instance_count, which no valid ground-truth index can collide with.
SceneGraph apply_mapping(const SceneGraph& pred, const InstanceMapping& m, int max_instance_count);

// Recall (and matched count) achieved by an arbitrary feasible pair list,
// e.g. a planted mapping. Pairs whose endpoints do not occur in the graphs
// contribute nothing.
InstanceMapping evaluate_mapping(const SceneGraph& gt, const SceneGraph& pred,
                                 const std::vector<std::pair<EntityInstance, EntityInstance>>& pairs,
                                 bool dedup_gt = false);

} // namespace lfsgg
