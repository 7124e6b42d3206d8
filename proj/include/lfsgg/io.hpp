#pragma once

#include <string>
#include <vector>

#include "lfsgg/codec.hpp"
#include "lfsgg/graph.hpp"
#include "lfsgg/metrics.hpp"
#include "lfsgg/synth.hpp"

namespace lfsgg {

// Graph files are JSONL, one record per line:
//   {"image_id": "...", "triplets": [{"sub": {"cls": "person", "idx": 0},
//    "pred": "holding", "obj": {"cls": "cup", "idx": 0}, "score": 0.9}, ...]}
// score is optional. Labels must resolve against the vocabulary; instance
// indices must lie in [0, max_instance_count). Structural problems raise
// ParseError, label problems UnknownLabel / VocabularyOverflow — all
// diagnostics carry the 1-based line number.
std::vector<SceneGraph> load_graphs(const std::string& path, const Vocabulary& vocab);
void save_graphs(const std::vector<SceneGraph>& graphs, const Vocabulary& vocab,
                 const std::string& path);

// Vocabulary files are a single JSON object:
//   {"classes": [...], "predicates": [...], "max_instances": 32}
// max_instances defaults to 32 when absent.
Vocabulary load_vocabulary(const std::string& path);
void save_vocabulary(const Vocabulary& vocab, const std::string& path);

// Vocabulary implied by graph files themselves: labels in first-appearance
// order across the given paths, max_instances = 1 + the largest index seen.
Vocabulary infer_vocabulary(const std::vector<std::string>& paths);

// Token files: whitespace-separated integers, one sequence per line. When a
// TokenSpace is supplied, out-of-range tokens are rejected at parse time.
std::vector<TokenSequence> load_token_lines(const std::string& path,
                                            const TokenSpace* space = nullptr);
void save_token_lines(const std::vector<TokenSequence>& sequences, const std::string& path);

// Plain id-per-line sidecar naming the graph behind each token line.
std::vector<std::string> load_id_lines(const std::string& path);
void save_id_lines(const std::vector<std::string>& ids, const std::string& path);

// Planted-mapping sidecar (JSONL): {"image_id": ..., "recall": ...,
// "pairs": [{"cls": ..., "gt": ..., "pred": ...}]}
void save_mappings(const std::vector<SynthPair>& pairs, const Vocabulary& vocab,
                   const std::string& path);
std::vector<std::pair<std::string, InstanceMapping>> load_mappings(const std::string& path,
                                                                   const Vocabulary& vocab);

// Report serialization: JSON with stable key order. Per-image matcher times
// are volatile across runs and machines, so they are only included on
// request; everything else is byte-deterministic for a given input.
std::string report_to_json(const EvalReport& report, bool with_timings = false);
EvalReport report_from_json(const std::string& text);
void save_report(const EvalReport& report, const std::string& path, bool with_timings = false);
EvalReport load_report(const std::string& path);

} // namespace lfsgg
