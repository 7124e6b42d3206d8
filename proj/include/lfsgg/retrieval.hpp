#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lfsgg/graph.hpp"
#include "lfsgg/matcher.hpp"

namespace lfsgg {

// A scored candidate pool for graph-to-graph lookup.
struct Gallery {
    std::vector<std::pair<std::string, SceneGraph>> entries;

    void validate() const; // throws Error on duplicate graph ids
};

// F1 of matching `query` (as ground truth) against `candidate`: 1.0 exactly
// when the two graphs are instance-relabelings of each other, 0.0 when no
// quintuple can be matched at all.
double similarity(const SceneGraph& query, const SceneGraph& candidate, const MatchConfig& cfg);

// Every gallery entry scored against the query, sorted by descending
// similarity with ties broken by ascending graph_id, truncated to top_n.
std::vector<std::pair<std::string, double>> rank(const SceneGraph& query, const Gallery& gallery,
                                                 const MatchConfig& cfg, int top_n);

} // namespace lfsgg
