#include "lfsgg/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "lfsgg/errors.hpp"
#include "lfsgg/rng.hpp"

namespace lfsgg {

TokenSpace TokenSpace::from_vocabulary(const Vocabulary& vocab) {
    vocab.validate();
    return {vocab.num_classes(), vocab.num_predicates(), vocab.max_instance_count};
}

int TokenSpace::class_token(int cls) const {
    if (cls < 0 || cls >= num_classes)
        throw UnknownLabel("class index out of range: " + std::to_string(cls));
    return cls;
}

int TokenSpace::predicate_token(int pred) const {
    if (pred < 0 || pred >= num_predicates)
        throw UnknownLabel("predicate index out of range: " + std::to_string(pred));
    return num_classes + pred;
}

int TokenSpace::instance_token(int idx) const {
    if (idx < 0 || idx >= max_instance_count)
        throw VocabularyOverflow("instance index out of range: " + std::to_string(idx));
    return num_classes + num_predicates + idx;
}

TokenSpace::Kind TokenSpace::kind(int token) const {
    if (token < 0) return Kind::invalid;
    if (token < num_classes) return Kind::class_label;
    if (token < num_classes + num_predicates) return Kind::predicate;
    if (token < num_classes + num_predicates + max_instance_count) return Kind::instance;
    if (token == start_token()) return Kind::start;
    if (token == stop_token()) return Kind::stop;
    return Kind::invalid;
}

TokenSequence encode(const SceneGraph& g, const TokenSpace& space,
                     std::optional<std::uint64_t> shuffle_seed) {
    SceneGraph ordered = g;
    if (shuffle_seed) {
        std::mt19937_64 rng(*shuffle_seed);
        shuffle_in_place(rng, ordered.quintuples);
    }
    const SceneGraph canon =
        canonicalize(ordered, space.num_classes, space.num_predicates, space.max_instance_count);

    TokenSequence out;
    out.reserve(canon.quintuples.size() * 5 + 1);
    for (const auto& q : canon.quintuples) {
        out.push_back(space.class_token(q.sub.cls));
        out.push_back(space.instance_token(q.sub.idx));
        out.push_back(space.class_token(q.obj.cls));
        out.push_back(space.instance_token(q.obj.idx));
        out.push_back(space.predicate_token(q.pred));
    }
    out.push_back(space.stop_token());
    return out;
}

DecodeResult decode(const TokenSequence& tokens, const TokenSpace& space, int max_quintuples) {
    if (max_quintuples < 1) throw std::invalid_argument("max_quintuples must be >= 1");

    DecodeResult res;
    int block[5];
    int fill = 0;
    using Kind = TokenSpace::Kind;

    for (int tok : tokens) {
        if (static_cast<int>(res.graph.quintuples.size()) >= max_quintuples) break;
        if (space.kind(tok) == Kind::stop) {
            res.report.stopped = true;
            break;
        }
        block[fill++] = tok;
        if (fill < 5) continue;
        fill = 0;

        const bool shaped = space.kind(block[0]) == Kind::class_label &&
                            space.kind(block[1]) == Kind::instance &&
                            space.kind(block[2]) == Kind::class_label &&
                            space.kind(block[3]) == Kind::instance &&
                            space.kind(block[4]) == Kind::predicate;
        if (!shaped) {
            ++res.report.malformed;
            continue;
        }
        Quintuple q;
        q.sub = {space.class_of(block[0]), space.instance_of(block[1])};
        q.obj = {space.class_of(block[2]), space.instance_of(block[3])};
        q.pred = space.predicate_of(block[4]);
        res.graph.quintuples.push_back(q);
    }
    if (fill > 0) ++res.report.truncated;

    // Decoded instance indices already lie inside [0, I), so re-indexing by
    // first appearance cannot overflow and this never throws.
    res.graph =
        canonicalize(res.graph, space.num_classes, space.num_predicates, space.max_instance_count);
    return res;
}

int nucleus_sample(const std::vector<double>& probs, const SamplerConfig& cfg,
                   std::mt19937_64& rng) {
    if (cfg.p_value <= 0.0 || cfg.p_value > 1.0)
        throw std::invalid_argument("p_value must be in (0, 1]");
    if (probs.empty()) throw InvalidDistribution("empty probability vector");

    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw InvalidDistribution("negative probability entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw InvalidDistribution("probabilities sum to " + std::to_string(sum) + ", expected 1");

    std::vector<int> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return a < b;
    });

    // Smallest prefix reaching the target mass; rounding may leave the full
    // cumulative sum a hair short of p_value, in which case the nucleus is
    // everything.
    std::size_t nucleus = order.size();
    double mass = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        mass += probs[order[i]];
        if (mass >= cfg.p_value) {
            nucleus = i + 1;
            break;
        }
    }
    double nucleus_mass = 0.0;
    for (std::size_t i = 0; i < nucleus; ++i) nucleus_mass += probs[order[i]];

    const double u = rand_unit(rng) * nucleus_mass;
    double cum = 0.0;
    for (std::size_t i = 0; i < nucleus; ++i) {
        cum += probs[order[i]];
        if (cum > u) return order[i];
    }
    // Floating-point spillover: fall back to the last positive-mass member.
    for (std::size_t i = nucleus; i-- > 0;)
        if (probs[order[i]] > 0.0) return order[i];
    return order[0];
}

SceneGraph top_k_unique(const SceneGraph& g, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    struct KeyHash {
        std::size_t operator()(const std::array<int, 5>& a) const {
            std::size_t h = 0;
            for (int v : a) h = h * 1000003u + static_cast<std::size_t>(v) + 0x9e37u;
            return h;
        }
    };
    std::unordered_set<std::array<int, 5>, KeyHash> seen;

    SceneGraph out;
    out.image_id = g.image_id;
    for (const auto& q : g.quintuples) {
        if (static_cast<int>(out.quintuples.size()) >= k) break;
        if (seen.insert(q.key()).second) out.quintuples.push_back(q);
    }
    return out;
}

} // namespace lfsgg
