#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pooleval/metrics.hpp"
#include "pooleval/retrieval.hpp"

namespace pooleval {

struct MetadataDistributions {
    long engagement_min = 0;
    long engagement_max = 200;
    long poi_min = 0;
    long poi_max = 40;
    double quality_ok_rate = 0.9;
};

struct SyntheticSpec {
    uint64_t seed = 1;
    int n_docs = 50;
    int n_queries = 10;
    int facts_per_query = 2;
    int fact_placements_per_fact = 2;
    int distractor_sentences_per_doc = 22;
    int sections_per_doc = 6;
    MetadataDistributions meta;

    void validate() const;
};

struct PlantedFact {
    std::string token;     // distinctive marker, e.g. FACT-q3-1
    std::string sentence;  // the full planted sentence
};

// Full ground truth for a synthetic corpus: the planted facts per query plus,
// per segmentation, the exact positive chunk set computed by exhaustive scan.
class TrueGT {
public:
    std::map<std::string, std::vector<PlantedFact>> facts_by_query;

    void compute_positives(const std::string& strategy_id, const std::vector<Chunk>& chunks);
    bool has_strategy(const std::string& strategy_id) const;
    const std::set<std::string>& positives_for(const std::string& query_id,
                                               const std::string& strategy_id) const;

private:
    std::map<std::string, std::map<std::string, std::set<std::string>>> positives_;
    std::set<std::string> empty_;
};

struct SyntheticCorpus {
    std::vector<Document> docs;
    std::vector<Query> queries;
    TrueGT gt;
};

// Deterministic from spec.seed: byte-identical corpus dumps across runs.
// Each query gets facts_per_query fact sentences carrying FACT-q{i}-{j}
// markers, each planted into fact_placements_per_fact distinct documents at
// seeded positions among the distractor sentences. Throws
// std::invalid_argument when placements exceed corpus capacity.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

struct FullEvalResult {
    ConfusionCounts counts;  // chunk-level; tn filled for residual accounting
    double precision = 0.0;
    double chunk_recall = 0.0;
    double fact_recall = 0.0;  // denominator = all facts of the query
};

// Same counting rule as confusion_at_k but against the full-corpus positive
// set for the retriever's segmentation. Throws std::invalid_argument when the
// TrueGT has no positives computed for that segmentation.
FullEvalResult full_gt_eval(const RankedList& list, const TrueGT& gt,
                            const std::string& query_id, const std::string& strategy_id, int k,
                            const ChunkStore& chunks);

// --- Verification -------------------------------------------------------------

struct VerifyOptions {
    // > 0 selects the non-asserting noisy-judge mode: the report carries
    // divergence statistics and always passes.
    double noisy_flip_probability = 0.0;
    uint64_t noise_seed = 0;
    // When set, judgments go through a persistent cache at this directory
    // (reruns reuse it; edits to it are authoritative). Empty uses a
    // throwaway cache.
    std::filesystem::path cache_dir;
    size_t workers = 1;
};

struct VerifyRow {
    std::string query_id;
    std::string retriever_id;
    long tp_true = 0, fp_true = 0;
    long tp_pseudo = 0, fp_pseudo = 0;
    double precision_true = 0.0, precision_pseudo = 0.0;
    double chunk_recall_true = 0.0, chunk_recall_pseudo = 0.0;
    double fact_recall_true = 0.0, fact_recall_pseudo = 0.0;
    long fn_res = 0, tn_res = 0;
    bool predicted_positive_sets_equal = true;
};

struct VerificationReport {
    bool passed = true;
    std::string mode;  // "exact" or "noisy"
    std::vector<VerifyRow> rows;

    double max_precision_delta = 0.0;
    double chunk_recall_sign_agreement_rate = 1.0;
    double fact_recall_sign_agreement_rate = 1.0;
    double pseudo_ge_true_rate = 1.0;
    size_t sign_checks = 0;
    // (recall' == recall) must coincide with (fn_res == 0), except when
    // tp == 0 makes both recalls 0 regardless; such pairs are counted here.
    size_t equality_mismatches = 0;
    size_t tp_zero_pairs = 0;

    size_t n_chunks = 0;
    size_t judge_calls = 0;
    size_t pool_total = 0;
    std::vector<size_t> pool_sizes;
    size_t sum_topk_total = 0;

    std::vector<std::string> failures;  // human-readable, names query/retriever

    std::string summary() const;
};

// Runs the pooled pseudo-GT pipeline with the oracle judge/extractor next to
// full-GT evaluation on one synthetic corpus, and checks the subset-sampling
// algebra: predicted positives are preserved set-for-set, precision matches
// exactly, recall ordering is preserved for every retriever pair, pseudo
// recall never falls below true recall, and judge calls stay within the pool
// size. All specs must share one segmentation; `k` overrides every spec's
// depth.
VerificationReport verify_appendix_a(std::vector<RetrieverSpec> specs, const SyntheticSpec& synth,
                                     int k, const VerifyOptions& opts = {});

// "hash-<dim>" -> deterministic HashedBowEmbedder of that dimension (64 when
// the id carries no dimension suffix).
std::shared_ptr<Embedder> make_hash_embedder(const std::string& id);

// The seeded defaults used by the verify command when no config is given:
// >= 2000 chunks, 50 queries, and three retrievers sharing one segmentation.
SyntheticSpec default_verify_synth();
std::vector<RetrieverSpec> default_verify_retrievers();

void write_verification_report(const VerificationReport& report,
                               const std::filesystem::path& path);

}  // namespace pooleval
