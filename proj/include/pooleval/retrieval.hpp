#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "pooleval/corpus.hpp"
#include "pooleval/embedder.hpp"

namespace pooleval {

struct RankedEntry {
    std::string chunk_id;
    double score = 0.0;
    int rank = 0;
};

struct RankedList {
    std::string query_id;
    std::string retriever_id;
    std::vector<RankedEntry> entries;
};

// Sorts by score descending with ties broken by ascending chunk_id, assigns
// ranks 1..n, and truncates to k (k < 0 keeps everything).
RankedList make_ranked(const std::string& query_id, const std::string& retriever_id,
                       std::vector<std::pair<std::string, double>> scored, int k = -1);

// Checks ranks are 1..n consecutive, scores non-increasing, and chunk ids
// unique. When require_id_tiebreak is set, equal-score neighbors must also be
// in ascending chunk_id order (recall and fusion outputs guarantee this;
// rerankers order ties by prior rank instead). Throws std::runtime_error.
void validate_ranked_list(const RankedList& list, bool require_id_tiebreak);

struct FilterSpec {
    bool quality = false;
    bool length = false;
    long length_threshold_chars = 50;
    bool engagement = false;
    long engagement_threshold = 25;
    bool poi = false;
    double poi_bottom_percentile = 0.25;

    bool any_enabled() const { return quality || length || engagement || poi; }
    void validate() const;
};

enum class RerankKind { none, pointwise, sliding_window };

struct RerankerSpec {
    RerankKind kind = RerankKind::none;
    int window = 20;
    int overlap = 10;
    void validate() const;
};

enum class RetrievalMode { dense, hybrid };

std::string to_string(RetrievalMode m);
RetrievalMode retrieval_mode_from_string(const std::string& s);
std::string to_string(RerankKind k);
RerankKind rerank_kind_from_string(const std::string& s);

struct RetrieverSpec {
    std::string id;
    SegmentationSpec segmentation;
    RetrievalMode mode = RetrievalMode::dense;
    std::string embedder_id;
    int k = 10;
    bool rewriter = false;
    FilterSpec filter;
    RerankerSpec reranker;
    int pool_multiplier = 4;

    void validate() const;
};

// --- Indexes -----------------------------------------------------------------

// Exact full-scan cosine kNN over one segmentation's chunk vectors.
class DenseIndex {
public:
    DenseIndex(std::vector<std::string> chunk_ids, std::vector<EmbeddingVector> vectors);

    RankedList search(const EmbeddingVector& query, int k, const std::string& query_id) const;
    size_t size() const { return ids_.size(); }

private:
    std::vector<std::string> ids_;
    std::vector<EmbeddingVector> vectors_;
};

// BM25 inverted index (k1=1.2, b=0.75, idf = ln(1 + (N-df+0.5)/(df+0.5))).
// Tokenization: Unicode word boundaries via text::tokenize, lowercased, no
// stemming. Distinct query terms each contribute once.
class SparseIndex {
public:
    explicit SparseIndex(const std::vector<Chunk>& chunks);

    RankedList search(const std::string& query, int k, const std::string& query_id) const;
    size_t size() const { return ids_.size(); }

    static constexpr double kK1 = 1.2;
    static constexpr double kB = 0.75;

private:
    struct Posting {
        size_t chunk_index;
        long term_frequency;
    };
    std::vector<std::string> ids_;
    std::vector<long> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

// Reciprocal-rank fusion with constant 60: score(c) = sum over lists of
// 1/(60 + rank). Chunks missing from a list contribute nothing for it.
RankedList hybrid_fuse(const RankedList& dense, const RankedList& sparse, int k);

// --- Rewriter ----------------------------------------------------------------

class QueryRewriter {
public:
    virtual ~QueryRewriter() = default;
    virtual std::string id() const = 0;
    // Up to 4 rewrites; callers pad via rewrite_query.
    virtual std::vector<std::string> rewrite(const std::string& query) = 0;
};

// Deterministic template expansions that embed the original query verbatim.
class TemplateRewriter : public QueryRewriter {
public:
    std::string id() const override { return "template-rewriter"; }
    std::vector<std::string> rewrite(const std::string& query) override;
};

class RemoteRewriter : public QueryRewriter {
public:
    RemoteRewriter(std::shared_ptr<HttpAdapterClient> client, std::shared_ptr<AdapterCache> cache);
    std::string id() const override;
    std::vector<std::string> rewrite(const std::string& query) override;

private:
    std::shared_ptr<HttpAdapterClient> client_;
    std::shared_ptr<AdapterCache> cache_;
};

// Returns exactly 4 rewrites: the adapter's distinct non-empty rewrites that
// differ from the original, padded with the original query when fewer than 4
// remain. `padded` (when given) receives the number of padding slots.
std::vector<std::string> rewrite_query(QueryRewriter& rewriter, const std::string& query,
                                       size_t* padded = nullptr);

// --- Filters -----------------------------------------------------------------

// Removes candidates whose parent document fails any enabled predicate;
// survivors keep relative order and scores, ranks are recomputed.
RankedList apply_filters(const RankedList& candidates, const FilterSpec& spec,
                         const DocumentStore& docs, const ChunkStore& chunks,
                         const PoiPercentiles& poi);

// --- Rerankers ---------------------------------------------------------------

class PointwiseScorer {
public:
    virtual ~PointwiseScorer() = default;
    virtual std::string id() const = 0;
    virtual std::vector<double> score(const std::string& query,
                                      const std::vector<const Chunk*>& chunks) = 0;
};

class ListwiseReranker {
public:
    virtual ~ListwiseReranker() = default;
    virtual std::string id() const = 0;
    // Returns window chunk ids, best first. Non-permutations are repaired by
    // the caller.
    virtual std::vector<std::string> order(const std::string& query,
                                           const std::vector<const Chunk*>& window) = 0;
};

// Jaccard token overlap with the query; the deterministic offline default.
class TokenOverlapScorer : public PointwiseScorer {
public:
    std::string id() const override { return "token-overlap"; }
    std::vector<double> score(const std::string& query,
                              const std::vector<const Chunk*>& chunks) override;
};

class TokenOverlapListwise : public ListwiseReranker {
public:
    std::string id() const override { return "token-overlap"; }
    std::vector<std::string> order(const std::string& query,
                                   const std::vector<const Chunk*>& window) override;
};

// Test oracle: sorts a window by a planted relevance key, descending, stable.
class KeyedListwise : public ListwiseReranker {
public:
    explicit KeyedListwise(std::map<std::string, double> keys) : keys_(std::move(keys)) {}
    std::string id() const override { return "keyed-oracle"; }
    std::vector<std::string> order(const std::string& query,
                                   const std::vector<const Chunk*>& window) override;

private:
    std::map<std::string, double> keys_;
};

class RemotePointwiseScorer : public PointwiseScorer {
public:
    RemotePointwiseScorer(std::shared_ptr<HttpAdapterClient> client,
                          std::shared_ptr<AdapterCache> cache);
    std::string id() const override;
    std::vector<double> score(const std::string& query,
                              const std::vector<const Chunk*>& chunks) override;

private:
    std::shared_ptr<HttpAdapterClient> client_;
    std::shared_ptr<AdapterCache> cache_;
};

class RemoteListwiseReranker : public ListwiseReranker {
public:
    RemoteListwiseReranker(std::shared_ptr<HttpAdapterClient> client,
                           std::shared_ptr<AdapterCache> cache);
    std::string id() const override;
    std::vector<std::string> order(const std::string& query,
                                   const std::vector<const Chunk*>& window) override;

private:
    std::shared_ptr<HttpAdapterClient> client_;
    std::shared_ptr<AdapterCache> cache_;
};

struct RerankStats {
    size_t pointwise_calls = 0;
    size_t listwise_calls = 0;
    // 1-based [first, last] positions of each listwise window, in call order.
    std::vector<std::pair<int, int>> windows;
    size_t repairs = 0;
};

// `none` is the identity. `pointwise` sorts by adapter score descending with
// ties kept in prior-rank order. `sliding_window` walks windows of
// spec.window entries from the tail of the list toward the head, advancing by
// window - overlap, reordering each window in place so that items promoted
// into the overlap region compete in the next (earlier) window. Ranks are
// recomputed afterwards; sliding-window scores are positional.
RankedList rerank(const std::string& query, const RankedList& list, const RerankerSpec& spec,
                  PointwiseScorer* pointwise, ListwiseReranker* listwise,
                  const ChunkStore& chunks, RerankStats* stats = nullptr);

// --- Pipeline ----------------------------------------------------------------

struct PipelineStats {
    size_t recall_calls = 0;
    std::vector<int> recall_depths;
    size_t rewrite_padding = 0;
    RerankStats rerank;
};

// Owns the corpus, per-strategy chunkings, and lazily built indexes; executes
// the full retriever pipeline rewrite -> recall -> filter -> rerank ->
// truncate for any RetrieverSpec. Immutable after the ensure_* calls, so
// run_retriever is safe to call concurrently.
class RetrievalEngine {
public:
    explicit RetrievalEngine(std::vector<Document> docs, size_t build_workers = 1);

    void register_embedder(std::shared_ptr<Embedder> embedder);
    void set_rewriter(std::shared_ptr<QueryRewriter> rewriter);
    void set_pointwise(std::shared_ptr<PointwiseScorer> scorer);
    void set_listwise(std::shared_ptr<ListwiseReranker> reranker);

    // Builds (or reuses) the chunking and indexes a spec needs.
    void prepare(const RetrieverSpec& spec);

    RankedList run_retriever(const RetrieverSpec& spec, const Query& query,
                             PipelineStats* stats = nullptr) const;

    const DocumentStore& documents() const { return docs_; }
    const PoiPercentiles& poi_percentiles() const { return poi_; }
    const ChunkStore& chunks(const std::string& strategy_id) const;
    bool has_chunking(const std::string& strategy_id) const;

    static constexpr int kRewriterRecallDepth = 10;

private:
    RankedList recall(const RetrieverSpec& spec, const std::string& query_text,
                      const std::string& query_id, int depth, PipelineStats* stats) const;

    DocumentStore docs_;
    PoiPercentiles poi_;
    size_t build_workers_;
    std::map<std::string, ChunkStore> chunkings_;
    std::map<std::string, SparseIndex> sparse_;
    std::map<std::string, DenseIndex> dense_;  // key: strategy_id + '\x1f' + embedder_id
    std::map<std::string, std::shared_ptr<Embedder>> embedders_;
    std::shared_ptr<QueryRewriter> rewriter_;
    std::shared_ptr<PointwiseScorer> pointwise_;
    std::shared_ptr<ListwiseReranker> listwise_;
};

}  // namespace pooleval
