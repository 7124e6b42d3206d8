#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "lfsgg/codec.hpp"
#include "lfsgg/errors.hpp"
#include "lfsgg/matcher.hpp"
#include "lfsgg/rng.hpp"

using namespace lfsgg;
using testutil::graph;
using testutil::q;

namespace {

const TokenSpace kSpace{3, 2, 4}; // tokens: 0-2 classes, 3-4 predicates, 5-8 instances, 9/10 ctrl

SceneGraph random_graph(std::mt19937_64& rng, const TokenSpace& sp, int n_edges) {
    SceneGraph g;
    g.image_id = "r";
    for (int e = 0; e < n_edges; ++e) {
        Quintuple t;
        t.sub = {static_cast<int>(rand_below(rng, sp.num_classes)),
                 static_cast<int>(rand_below(rng, sp.max_instance_count))};
        t.obj = {static_cast<int>(rand_below(rng, sp.num_classes)),
                 static_cast<int>(rand_below(rng, sp.max_instance_count))};
        t.pred = static_cast<int>(rand_below(rng, sp.num_predicates));
        g.quintuples.push_back(t);
    }
    return g;
}

} // namespace

TEST_CASE("token ranges are contiguous and disjoint") {
    CHECK(kSpace.vocab_size() == 11);
    CHECK(kSpace.start_token() == 9);
    CHECK(kSpace.stop_token() == 10);

    CHECK(kSpace.class_token(2) == 2);
    CHECK(kSpace.predicate_token(1) == 4);
    CHECK(kSpace.instance_token(3) == 8);

    using Kind = TokenSpace::Kind;
    CHECK(kSpace.kind(0) == Kind::class_label);
    CHECK(kSpace.kind(2) == Kind::class_label);
    CHECK(kSpace.kind(3) == Kind::predicate);
    CHECK(kSpace.kind(4) == Kind::predicate);
    CHECK(kSpace.kind(5) == Kind::instance);
    CHECK(kSpace.kind(8) == Kind::instance);
    CHECK(kSpace.kind(9) == Kind::start);
    CHECK(kSpace.kind(10) == Kind::stop);
    CHECK(kSpace.kind(11) == Kind::invalid);
    CHECK(kSpace.kind(-1) == Kind::invalid);

    // inverses
    CHECK(kSpace.class_of(kSpace.class_token(1)) == 1);
    CHECK(kSpace.predicate_of(kSpace.predicate_token(0)) == 0);
    CHECK(kSpace.instance_of(kSpace.instance_token(2)) == 2);

    CHECK_THROWS_AS(kSpace.class_token(3), UnknownLabel);
    CHECK_THROWS_AS(kSpace.class_token(-1), UnknownLabel);
    CHECK_THROWS_AS(kSpace.predicate_token(2), UnknownLabel);
    CHECK_THROWS_AS(kSpace.instance_token(4), VocabularyOverflow);
}

TEST_CASE("token space mirrors a vocabulary") {
    const Vocabulary v = testutil::make_vocab(3, 2, 4);
    const TokenSpace sp = TokenSpace::from_vocabulary(v);
    CHECK(sp.num_classes == 3);
    CHECK(sp.num_predicates == 2);
    CHECK(sp.max_instance_count == 4);

    Vocabulary bad;
    bad.predicates = {"p"};
    CHECK_THROWS_AS(TokenSpace::from_vocabulary(bad), InvalidVocabulary);
}

TEST_CASE("encode lays out five tokens per quintuple plus stop") {
    CHECK(encode(SceneGraph{}, kSpace) == TokenSequence{10});

    const SceneGraph one = graph("i", {q(0, 0, 1, 2, 0)});
    CHECK(encode(one, kSpace) == TokenSequence{0, 5, 2, 5, 4, 10});

    // indices are re-assigned by first appearance before tokenizing
    const SceneGraph two = graph("i", {q(1, 7, 0, 1, 3), q(1, 3, 1, 1, 7)});
    CHECK(encode(two, kSpace) == TokenSequence{1, 5, 1, 6, 3, 1, 6, 1, 5, 4, 10});

    // raw indices may exceed the budget as long as the distinct count fits
    const SceneGraph sparse = graph("i", {q(0, 1000, 0, 0, 2000)});
    CHECK(encode(sparse, kSpace) == TokenSequence{0, 5, 0, 6, 3, 10});

    CHECK_THROWS_AS(encode(graph("i", {q(7, 0, 0, 0, 0)}), kSpace), UnknownLabel);
    const SceneGraph crowded = graph("i", {q(0, 0, 0, 0, 1), q(0, 2, 0, 0, 3), q(0, 4, 0, 0, 5)});
    CHECK_THROWS_AS(encode(crowded, kSpace), VocabularyOverflow); // 6 distinct class-0 instances
}

TEST_CASE("decode inverts encode") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 100; ++i) {
        SceneGraph g = random_graph(rng, kSpace, static_cast<int>(rand_below(rng, 8)));
        g.image_id = "round";
        const TokenSequence toks = encode(g, kSpace);
        const DecodeResult res = decode(toks, kSpace, 100);

        const SceneGraph expect = canonicalize(g, kSpace.num_classes, kSpace.num_predicates,
                                               kSpace.max_instance_count);
        REQUIRE(res.graph.quintuples.size() == expect.quintuples.size());
        for (std::size_t j = 0; j < expect.quintuples.size(); ++j)
            CHECK(res.graph.quintuples[j] == expect.quintuples[j]);
        CHECK(res.report.malformed == 0);
        CHECK(res.report.truncated == 0);
        CHECK(res.report.stopped);
    }
}

TEST_CASE("seeded shuffle reorders without changing the graph") {
    std::mt19937_64 rng(7);
    SceneGraph g;
    do {
        g = random_graph(rng, kSpace, 6);
    } while (top_k_unique(g, 6).quintuples.size() < 6); // want distinct rows so order shows

    const TokenSequence plain = encode(g, kSpace);
    const TokenSequence s1 = encode(g, kSpace, 123);
    const TokenSequence s1_again = encode(g, kSpace, 123);
    CHECK(s1 == s1_again); // same seed, same sequence

    bool any_different = false;
    for (std::uint64_t seed = 0; seed < 16; ++seed)
        if (encode(g, kSpace, seed) != plain) any_different = true;
    CHECK(any_different);

    // every ordering decodes to an equivalent graph up to instance relabeling
    const SceneGraph canon =
        canonicalize(g, kSpace.num_classes, kSpace.num_predicates, kSpace.max_instance_count);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const SceneGraph back = decode(encode(g, kSpace, seed), kSpace, 100).graph;
        CHECK(back.size() == canon.size());
        CHECK(exhaustive_match(canon, back).recall == 1.0);
        CHECK(exhaustive_match(back, canon).recall == 1.0);
    }
}

TEST_CASE("decode skips malformed blocks and keeps counting") {
    // second block puts a class token where an instance must be
    const TokenSequence toks{0, 5, 2, 5, 4, 0, 0, 2, 5, 4, 10};
    const DecodeResult res = decode(toks, kSpace, 100);
    CHECK(res.graph.quintuples.size() == 1);
    CHECK(res.report.malformed == 1);
    CHECK(res.report.truncated == 0);
    CHECK(res.report.stopped);

    // out-of-range and control tokens inside a block are malformed too
    const DecodeResult junk = decode({0, 5, 99, 5, 4, 10}, kSpace, 100);
    CHECK(junk.graph.empty());
    CHECK(junk.report.malformed == 1);
}

TEST_CASE("decode counts partial trailing blocks") {
    const DecodeResult eof = decode({0, 5, 2, 5}, kSpace, 100);
    CHECK(eof.graph.empty());
    CHECK(eof.report.truncated == 1);
    CHECK_FALSE(eof.report.stopped);

    const DecodeResult stop = decode({0, 5, 10}, kSpace, 100);
    CHECK(stop.graph.empty());
    CHECK(stop.report.truncated == 1);
    CHECK(stop.report.stopped);

    CHECK_FALSE(decode({}, kSpace, 100).report.stopped);
}

TEST_CASE("decode honors the quintuple budget") {
    SceneGraph g;
    g.image_id = "b";
    for (int i = 0; i < 3; ++i) g.quintuples.push_back(q(0, 0, i % 2, 1, 0));
    const TokenSequence toks = encode(g, kSpace);
    const DecodeResult res = decode(toks, kSpace, 2);
    CHECK(res.graph.quintuples.size() == 2);
    CHECK_FALSE(res.report.stopped); // budget cut in before the stop token
    CHECK_THROWS_AS(decode(toks, kSpace, 0), std::invalid_argument);
}

TEST_CASE("decode survives arbitrary token soup") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10000; ++i) {
        TokenSequence toks(rand_below(rng, 40));
        for (int& t : toks) t = static_cast<int>(rand_below(rng, kSpace.vocab_size() + 4)) - 2;
        const DecodeResult res = decode(toks, kSpace, 50);
        CHECK(res.report.malformed >= 0);
        CHECK(res.report.truncated <= 1);
        for (const auto& t : res.graph.quintuples) {
            CHECK(t.sub.cls < kSpace.num_classes);
            CHECK(t.obj.cls < kSpace.num_classes);
            CHECK(t.pred < kSpace.num_predicates);
        }
    }
}

TEST_CASE("nucleus sampling stays inside the nucleus") {
    const std::vector<double> probs{0.4, 0.35, 0.15, 0.1};
    SamplerConfig cfg;
    cfg.p_value = 0.5; // nucleus = {0, 1} with mass 0.75
    std::mt19937_64 rng(1);

    int count[4] = {0, 0, 0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++count[nucleus_sample(probs, cfg, rng)];
    CHECK(count[2] == 0);
    CHECK(count[3] == 0);
    CHECK(static_cast<double>(count[0]) / n == doctest::Approx(0.4 / 0.75).epsilon(0.05));
    CHECK(static_cast<double>(count[1]) / n == doctest::Approx(0.35 / 0.75).epsilon(0.05));
}

TEST_CASE("nucleus sampling at p=1 reproduces the full distribution") {
    const std::vector<double> probs{0.25, 0.25, 0.25, 0.25};
    SamplerConfig cfg;
    cfg.p_value = 1.0;
    std::mt19937_64 rng(2);
    int count[4] = {0, 0, 0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++count[nucleus_sample(probs, cfg, rng)];
    for (int c : count) CHECK(std::abs(static_cast<double>(c) / n - 0.25) < 0.01);
}

TEST_CASE("tiny p degenerates to argmax with ascending-id ties") {
    SamplerConfig cfg;
    cfg.p_value = 1e-12;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        CHECK(nucleus_sample({0.1, 0.6, 0.3}, cfg, rng) == 1);
        CHECK(nucleus_sample({0.3, 0.3, 0.2, 0.2}, cfg, rng) == 0); // tie -> smallest id
    }
}

TEST_CASE("degenerate and invalid distributions") {
    std::mt19937_64 rng(4);
    SamplerConfig cfg;
    CHECK(nucleus_sample({1.0}, cfg, rng) == 0);
    CHECK(nucleus_sample({0.0, 1.0, 0.0}, cfg, rng) == 1);

    CHECK_THROWS_AS(nucleus_sample({}, cfg, rng), InvalidDistribution);
    CHECK_THROWS_AS(nucleus_sample({0.5, -0.1, 0.6}, cfg, rng), InvalidDistribution);
    CHECK_THROWS_AS(nucleus_sample({0.5, 0.4}, cfg, rng), InvalidDistribution);

    SamplerConfig bad;
    bad.p_value = 0.0;
    CHECK_THROWS_AS(nucleus_sample({1.0}, bad, rng), std::invalid_argument);
    bad.p_value = 1.5;
    CHECK_THROWS_AS(nucleus_sample({1.0}, bad, rng), std::invalid_argument);
}

TEST_CASE("sampling is reproducible for a fixed rng stream") {
    const std::vector<double> probs{0.5, 0.3, 0.2};
    SamplerConfig cfg;
    std::mt19937_64 a(77), b(77);
    for (int i = 0; i < 200; ++i) CHECK(nucleus_sample(probs, cfg, a) == nucleus_sample(probs, cfg, b));
}

TEST_CASE("top_k_unique keeps first occurrences in rank order") {
    const Quintuple A = q(0, 0, 0, 1, 0);
    const Quintuple B = q(1, 0, 1, 2, 0);
    const Quintuple C = q(2, 0, 0, 0, 0);
    const Quintuple D = q(0, 1, 1, 1, 1);
    SceneGraph g;
    g.image_id = "ranked";
    g.quintuples = {A, B, A, C, B, D};

    const SceneGraph top3 = top_k_unique(g, 3);
    REQUIRE(top3.quintuples.size() == 3);
    CHECK(top3.quintuples[0] == A);
    CHECK(top3.quintuples[1] == B);
    CHECK(top3.quintuples[2] == C);
    CHECK(top3.image_id == "ranked");

    CHECK(top_k_unique(g, 100).quintuples.size() == 4);
    CHECK_THROWS_AS(top_k_unique(g, 0), std::invalid_argument);

    // growing k only appends
    const SceneGraph top2 = top_k_unique(g, 2);
    for (std::size_t i = 0; i < top2.quintuples.size(); ++i)
        CHECK(top2.quintuples[i] == top3.quintuples[i]);

    // a score difference alone does not make two rows distinct
    SceneGraph scored = g;
    scored.quintuples[2].score = 0.25;
    CHECK(top_k_unique(scored, 100).quintuples.size() == 4);
}
