#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lfsgg/graph.hpp"
#include "lfsgg/matcher.hpp"

namespace lfsgg {

// Knobs for the seeded corpus generator. Sizes are uniform over the given
// closed ranges; rates are per-item probabilities. The per-class instance
// cap is deliberately small so the exhaustive oracle stays cheap on every
// generated pair.
struct SynthConfig {
    std::uint64_t seed = 0;
    int n_images = 100;

    int num_classes = 12;
    int num_predicates = 8;
    int min_nodes = 4;
    int max_nodes = 10;
    int max_instances_per_class = 3;
    int min_quintuples = 6;
    int max_quintuples = 18;

    // probability that a class's instance ids get permuted in the prediction
    double instance_shuffle = 0.0;
    double edge_drop = 0.0;   // per-quintuple removal probability
    double edge_add = 0.0;    // expected spurious quintuples per original one
    double label_noise = 0.0; // per-quintuple predicate corruption probability

    void validate() const; // throws std::invalid_argument on nonsense
};

// One corpus entry: the ground truth, the perturbed prediction, and the
// instance permutation the prediction was built with. The planted mapping is
// a feasibility witness: its recall is a lower bound on the oracle's.
struct SynthPair {
    SceneGraph gt;
    SceneGraph pred;
    InstanceMapping planted;
};

// Vocabulary matching cfg's label ranges (class_00.., pred_00..), sized so
// every generated graph and its token encoding fit.
Vocabulary synth_vocabulary(const SynthConfig& cfg);

// Deterministic per seed: each image derives its own rng stream, so corpora
// are bit-identical across runs and platforms.
std::vector<SynthPair> generate(const SynthConfig& cfg);

// A pair on which per-class one-shot assignment provably underperforms: two
// classes each have two instances with identical one-hop neighborhoods, and
// only a coordinated choice across the classes reaches the oracle recall.
// Retries the two-class relabel combinations until first_order_match scores
// strictly below exhaustive_match; throws GenerationFailed when
// max_instances_per_class < 2 (no tie is constructible) or no combination
// defeats the baseline.
std::pair<SceneGraph, SceneGraph> adversarial_tie_case(std::uint64_t seed,
                                                       int max_instances_per_class = 2);

} // namespace lfsgg
