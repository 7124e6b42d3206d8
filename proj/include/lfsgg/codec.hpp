#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "lfsgg/graph.hpp"

namespace lfsgg {

// Integer token layout for one vocabulary. Tokens form contiguous disjoint
// ranges: class tokens first, then predicates, then instance indices, then
// the two control tokens, so kind checks are plain range comparisons.
//
//   [0, C)            class tokens
//   [C, C+P)          predicate tokens
//   [C+P, C+P+I)      instance-index tokens
//   C+P+I             START
//   C+P+I+1           STOP
struct TokenSpace {
    int num_classes = 0;
    int num_predicates = 0;
    int max_instance_count = 0;

    static TokenSpace from_vocabulary(const Vocabulary& vocab);

    int vocab_size() const { return num_classes + num_predicates + max_instance_count + 2; }
    int start_token() const { return num_classes + num_predicates + max_instance_count; }
    int stop_token() const { return start_token() + 1; }

    int class_token(int cls) const;      // throws UnknownLabel outside [0, C)
    int predicate_token(int pred) const; // throws UnknownLabel outside [0, P)
    int instance_token(int idx) const;   // throws VocabularyOverflow outside [0, I)

    enum class Kind { class_label, predicate, instance, start, stop, invalid };
    Kind kind(int token) const;

    // Inverse of the *_token accessors; only meaningful when kind() agrees.
    int class_of(int token) const { return token; }
    int predicate_of(int token) const { return token - num_classes; }
    int instance_of(int token) const { return token - num_classes - num_predicates; }
};

using TokenSequence = std::vector<int>;

struct SamplerConfig {
    double p_value = 0.95;     // nucleus mass, in (0, 1]
    std::uint64_t seed = 0;    // stream seed; the caller owns the rng state
};

// Counters describing how much of a token sequence survived decoding.
struct DecodeReport {
    int malformed = 0; // five-token blocks whose kinds did not fit the pattern
    int truncated = 0; // 1 if the sequence ended (or STOP arrived) mid-block
    bool stopped = false; // STOP was seen before the budget ran out
};

struct DecodeResult {
    SceneGraph graph;
    DecodeReport report;
};

// Serializes g as one five-token block (sub_cls, sub_idx, obj_cls, obj_idx,
// pred) per quintuple, terminated by STOP. The graph is canonicalized first;
// when shuffle_seed is given the quintuples are put in a seeded uniform
// random order before canonicalization, so instance indices follow first
// appearance within the shuffled sequence. Throws UnknownLabel /
// VocabularyOverflow when the graph does not fit the token space.
TokenSequence encode(const SceneGraph& g, const TokenSpace& space,
                     std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Reads five-token blocks until STOP, end of input, or max_quintuples
// decoded quintuples. Blocks that do not match the expected token-kind
// pattern are skipped and counted; a trailing partial block is dropped and
// counted. Never throws on malformed input; the result is canonicalized.
DecodeResult decode(const TokenSequence& tokens, const TokenSpace& space, int max_quintuples);

// Draws one token from the nucleus of the distribution: the smallest prefix
// of tokens, sorted by descending probability (ties by ascending token id),
// whose cumulative mass reaches cfg.p_value, renormalized. Deterministic
// given the rng state. Throws InvalidDistribution when probs has a negative
// entry or does not sum to 1 within 1e-6.
int nucleus_sample(const std::vector<double>& probs, const SamplerConfig& cfg,
                   std::mt19937_64& rng);

// First k pairwise-distinct quintuples of g in rank (list) order; fewer when
// g has fewer distinct quintuples. Identity is the full five-field key.
SceneGraph top_k_unique(const SceneGraph& g, int k);

} // namespace lfsgg
