#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lfsgg {

// Closed label sets for one dataset. Class and predicate labels are referred
// to by index everywhere else; max_instance_count bounds how many instances
// of one class a single image may contain.
struct Vocabulary {
    std::vector<std::string> classes;
    std::vector<std::string> predicates;
    int max_instance_count = 32;

    int num_classes() const { return static_cast<int>(classes.size()); }
    int num_predicates() const { return static_cast<int>(predicates.size()); }

    // Throws UnknownLabel if the label is not present.
    int class_index(const std::string& label) const;
    int predicate_index(const std::string& label) const;

    // Throws InvalidVocabulary on empty lists, duplicates, or a non-positive
    // instance bound.
    void validate() const;
};

// One node: a class plus a per-class ordinal distinguishing same-class
// entities within an image.
struct EntityInstance {
    int cls = 0;
    int idx = 0;

    auto operator<=>(const EntityInstance&) const = default;
};

// One directed relationship. The optional score is informational only
// (prediction rank is the list order in SceneGraph); it is excluded from
// quintuple identity.
struct Quintuple {
    EntityInstance sub;
    EntityInstance obj;
    int pred = 0;
    std::optional<double> score;

    std::array<int, 5> key() const { return {sub.cls, sub.idx, obj.cls, obj.idx, pred}; }

    friend bool operator==(const Quintuple& a, const Quintuple& b) { return a.key() == b.key(); }
    friend auto operator<=>(const Quintuple& a, const Quintuple& b) { return a.key() <=> b.key(); }
};

// An ordered multiset of quintuples for one image. For predictions the order
// is the prediction rank; for ground truth it is arbitrary. Duplicates are
// retained in storage and removed only where an operation says so.
struct SceneGraph {
    std::string image_id;
    std::vector<Quintuple> quintuples;

    bool empty() const { return quintuples.empty(); }
    std::size_t size() const { return quintuples.size(); }
};

// The distinct entity instances occurring as subject or object, ascending.
std::vector<EntityInstance> nodes(const SceneGraph& g);

// Number of quintuples incident to n. A self-loop counts once.
int degree(const SceneGraph& g, const EntityInstance& n);

enum class EdgeDirection : std::uint8_t {
    none = 0, // undirected view
    out = 1,  // n is the subject
    in = 2,   // n is the object
};

struct NeighborTuple {
    int predicate = 0;
    int neighbor_class = 0;
    EdgeDirection direction = EdgeDirection::none;

    auto operator<=>(const NeighborTuple&) const = default;
};

// One-hop neighborhood of n: one tuple per incident quintuple, sorted so the
// vector compares as a multiset. The undirected form carries
// (predicate, neighbor class) only; the directed form adds out/in, with a
// self-loop marked `out`.
using Neighborhood = std::vector<NeighborTuple>;

Neighborhood neighborhood(const SceneGraph& g, const EntityInstance& n, bool directed = false);

// Relabels instance indices per class by first appearance while scanning
// quintuples in order, subject before object. The result is isomorphic to
// the input and the operation is idempotent. Throws VocabularyOverflow when
// a class has more distinct instances than max_instance_count, and
// UnknownLabel on out-of-range class or predicate indices.
SceneGraph canonicalize(const SceneGraph& g, int num_classes, int num_predicates,
                        int max_instance_count);
SceneGraph canonicalize(const SceneGraph& g, const Vocabulary& vocab);

} // namespace lfsgg
