#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pooleval/judge.hpp"
#include "pooleval/retrieval.hpp"

namespace pooleval {

// The sampled subset for one query: the union of all compared retrievers'
// final top-K recall sets, with per-chunk contributor attribution.
struct SubsetPool {
    std::string query_id;
    std::set<std::string> chunk_ids;
    std::map<std::string, std::set<std::string>> contributors;  // chunk -> retriever ids
};

// A canonical, redundancy-stripped relevant text unit shared across the
// compared retrievers' differing chunkings.
struct MinimalFact {
    std::string fact_id;         // content hash of canonical_text
    std::string canonical_text;  // normalized
    std::vector<std::pair<std::string, Span>> sources;  // (chunk_id, span into chunk)
};

struct PseudoGT {
    std::string query_id;
    std::set<std::string> relevant_chunk_ids;
    std::vector<MinimalFact> facts;  // sorted by fact_id
};

struct PseudoGTBuildStats {
    size_t judge_calls = 0;   // inner judge invocations (cache misses)
    size_t judged = 0;        // pool chunks with a usable verdict
    size_t unjudged = 0;      // excluded chunks; > 0 marks the run partial
};

// Pools the final recall sets of >= 2 distinct retrievers for one query.
// Throws std::invalid_argument on fewer than two lists, duplicated retriever
// ids, or mismatched query ids.
SubsetPool build_subset(const std::string& query_id, const std::vector<RankedList>& results);

// Judges every pool chunk exactly once (ascending chunk id), extracts facts
// from the relevant ones, and canonicalizes them. `judgments_out`, when
// given, receives one Judgment per pool chunk for the audit export.
PseudoGT build_pseudo_gt(const SubsetPool& pool, const Query& query, RelevanceJudge& judge,
                         FactExtractor& extractor, const ChunkStore& chunks,
                         PseudoGTBuildStats* stats = nullptr,
                         std::vector<Judgment>* judgments_out = nullptr);

// Groups extractions by equivalence -- normalized-text equality or one
// normalized text contained in the other -- via union-find over pairwise
// containment. Each group becomes one MinimalFact whose canonical text is the
// group's shortest normalized member and whose sources are merged.
std::vector<MinimalFact> canonicalize_facts(const std::vector<FactExtraction>& extractions);

// True iff the normalized chunk text contains the fact's canonical text, or
// the chunk is listed among the fact's sources.
bool covers(const Chunk& chunk, const MinimalFact& fact);

std::string fact_id_for(const std::string& canonical_text);

// Per-run persistence: facts plus relevant chunk ids, reusable for metric
// recomputation without re-judging.
void dump_pseudo_gt_jsonl(const std::vector<PseudoGT>& gts, const std::filesystem::path& path);
std::vector<PseudoGT> load_pseudo_gt_jsonl(const std::filesystem::path& path);

void dump_pools_jsonl(const std::vector<SubsetPool>& pools, const std::filesystem::path& path);

void dump_ranked_lists_jsonl(const std::vector<RankedList>& lists,
                             const std::filesystem::path& path);
std::vector<RankedList> load_ranked_lists_jsonl(const std::filesystem::path& path);

}  // namespace pooleval
