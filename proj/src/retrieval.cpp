#include "lfsgg/retrieval.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "lfsgg/errors.hpp"
#include "lfsgg/metrics.hpp"

namespace lfsgg {

void Gallery::validate() const {
    std::unordered_set<std::string> ids;
    for (const auto& [id, graph] : entries)
        if (!ids.insert(id).second) throw Error("duplicate gallery graph_id: " + id);
}

double similarity(const SceneGraph& query, const SceneGraph& candidate, const MatchConfig& cfg) {
    const auto [precision, recall, f1] = precision_recall_f1(query, candidate, cfg);
    return f1;
}

std::vector<std::pair<std::string, double>> rank(const SceneGraph& query, const Gallery& gallery,
                                                 const MatchConfig& cfg, int top_n) {
    if (top_n < 1) throw std::invalid_argument("top_n must be >= 1");
    gallery.validate();

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(gallery.entries.size());
    for (const auto& [id, graph] : gallery.entries)
        scored.emplace_back(id, similarity(query, graph, cfg));

    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(scored.size()) > top_n) scored.resize(top_n);
    return scored;
}

} // namespace lfsgg
