#include "lfsgg/graph.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "lfsgg/errors.hpp"

namespace lfsgg {

int Vocabulary::class_index(const std::string& label) const {
    auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw UnknownLabel("unknown class label: " + label);
    return static_cast<int>(it - classes.begin());
}

int Vocabulary::predicate_index(const std::string& label) const {
    auto it = std::find(predicates.begin(), predicates.end(), label);
    if (it == predicates.end()) throw UnknownLabel("unknown predicate label: " + label);
    return static_cast<int>(it - predicates.begin());
}

void Vocabulary::validate() const {
    if (classes.empty()) throw InvalidVocabulary("vocabulary has no classes");
    if (predicates.empty()) throw InvalidVocabulary("vocabulary has no predicates");
    if (max_instance_count < 1) throw InvalidVocabulary("max_instance_count must be >= 1");
    std::unordered_set<std::string> seen;
    for (const auto& c : classes)
        if (!seen.insert(c).second) throw InvalidVocabulary("duplicate class label: " + c);
    seen.clear();
    for (const auto& p : predicates)
        if (!seen.insert(p).second) throw InvalidVocabulary("duplicate predicate label: " + p);
}

std::vector<EntityInstance> nodes(const SceneGraph& g) {
    std::vector<EntityInstance> out;
    out.reserve(g.quintuples.size() * 2);
    for (const auto& q : g.quintuples) {
        out.push_back(q.sub);
        out.push_back(q.obj);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

int degree(const SceneGraph& g, const EntityInstance& n) {
    int d = 0;
    for (const auto& q : g.quintuples)
        if (q.sub == n || q.obj == n) ++d;
    return d;
}

Neighborhood neighborhood(const SceneGraph& g, const EntityInstance& n, bool directed) {
    Neighborhood nb;
    for (const auto& q : g.quintuples) {
        if (q.sub != n && q.obj != n) continue;
        const bool is_subject = (q.sub == n);
        const EntityInstance& other = is_subject ? q.obj : q.sub;
        EdgeDirection dir = EdgeDirection::none;
        if (directed) dir = is_subject ? EdgeDirection::out : EdgeDirection::in;
        nb.push_back({q.pred, other.cls, dir});
    }
    std::sort(nb.begin(), nb.end());
    return nb;
}

SceneGraph canonicalize(const SceneGraph& g, int num_classes, int num_predicates,
                        int max_instance_count) {
    std::map<EntityInstance, int> assigned;       // original instance -> canonical idx
    std::vector<int> next_idx(num_classes, 0);    // per-class counter

    auto relabel = [&](const EntityInstance& e) -> EntityInstance {
        if (e.cls < 0 || e.cls >= num_classes)
            throw UnknownLabel("class index out of range: " + std::to_string(e.cls));
        auto [it, inserted] = assigned.try_emplace(e, next_idx[e.cls]);
        if (inserted) {
            if (next_idx[e.cls] >= max_instance_count)
                throw VocabularyOverflow("class " + std::to_string(e.cls) + " has more than " +
                                         std::to_string(max_instance_count) + " instances");
            ++next_idx[e.cls];
        }
        return {e.cls, it->second};
    };

    SceneGraph out;
    out.image_id = g.image_id;
    out.quintuples.reserve(g.quintuples.size());
    for (const auto& q : g.quintuples) {
        if (q.pred < 0 || q.pred >= num_predicates)
            throw UnknownLabel("predicate index out of range: " + std::to_string(q.pred));
        Quintuple c;
        c.sub = relabel(q.sub);
        c.obj = relabel(q.obj);
        c.pred = q.pred;
        c.score = q.score;
        out.quintuples.push_back(c);
    }
    return out;
}

SceneGraph canonicalize(const SceneGraph& g, const Vocabulary& vocab) {
    return canonicalize(g, vocab.num_classes(), vocab.num_predicates(), vocab.max_instance_count);
}

} // namespace lfsgg
