#include "pooleval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "pooleval/log.hpp"
#include "pooleval/parallel.hpp"
#include "pooleval/text.hpp"

namespace pooleval {

std::string to_string(RetrievalMode m) {
    return m == RetrievalMode::dense ? "dense" : "hybrid";
}

RetrievalMode retrieval_mode_from_string(const std::string& s) {
    if (s == "dense") return RetrievalMode::dense;
    if (s == "hybrid") return RetrievalMode::hybrid;
    throw std::invalid_argument("unknown retrieval mode: " + s);
}

std::string to_string(RerankKind k) {
    switch (k) {
        case RerankKind::none: return "none";
        case RerankKind::pointwise: return "pointwise";
        case RerankKind::sliding_window: return "sliding_window";
    }
    return "none";
}

RerankKind rerank_kind_from_string(const std::string& s) {
    if (s == "none") return RerankKind::none;
    if (s == "pointwise") return RerankKind::pointwise;
    if (s == "sliding_window") return RerankKind::sliding_window;
    throw std::invalid_argument("unknown reranker kind: " + s);
}

RankedList make_ranked(const std::string& query_id, const std::string& retriever_id,
                       std::vector<std::pair<std::string, double>> scored, int k) {
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (k >= 0 && scored.size() > static_cast<size_t>(k)) scored.resize(static_cast<size_t>(k));
    RankedList out;
    out.query_id = query_id;
    out.retriever_id = retriever_id;
    out.entries.reserve(scored.size());
    for (size_t i = 0; i < scored.size(); ++i) {
        out.entries.push_back({scored[i].first, scored[i].second, static_cast<int>(i) + 1});
    }
    return out;
}

void validate_ranked_list(const RankedList& list, bool require_id_tiebreak) {
    std::unordered_set<std::string> seen;
    for (size_t i = 0; i < list.entries.size(); ++i) {
        const RankedEntry& e = list.entries[i];
        if (e.rank != static_cast<int>(i) + 1) {
            throw std::runtime_error("ranked list " + list.query_id + "/" + list.retriever_id +
                                     ": rank " + std::to_string(e.rank) + " at position " +
                                     std::to_string(i + 1));
        }
        if (!seen.insert(e.chunk_id).second) {
            throw std::runtime_error("ranked list " + list.query_id + "/" + list.retriever_id +
                                     ": duplicate chunk " + e.chunk_id);
        }
        if (i > 0) {
            const RankedEntry& prev = list.entries[i - 1];
            if (prev.score < e.score) {
                throw std::runtime_error("ranked list " + list.query_id + "/" +
                                         list.retriever_id + ": score increases at rank " +
                                         std::to_string(e.rank));
            }
            if (require_id_tiebreak && prev.score == e.score && prev.chunk_id > e.chunk_id) {
                throw std::runtime_error("ranked list " + list.query_id + "/" +
                                         list.retriever_id + ": tie not broken by chunk id at rank " +
                                         std::to_string(e.rank));
            }
        }
    }
}

void FilterSpec::validate() const {
    if (length_threshold_chars < 0 || engagement_threshold < 0) {
        throw std::invalid_argument("filter thresholds must be >= 0");
    }
    if (poi_bottom_percentile <= 0.0 || poi_bottom_percentile >= 1.0) {
        throw std::invalid_argument("poi percentile must be in (0,1)");
    }
}

void RerankerSpec::validate() const {
    if (kind != RerankKind::sliding_window) return;
    if (!(0 < overlap && overlap < window)) {
        throw std::invalid_argument("sliding window requires 0 < overlap < window");
    }
}

void RetrieverSpec::validate() const {
    if (id.empty()) throw std::invalid_argument("retriever id must be non-empty");
    if (k < 1) throw std::invalid_argument("retriever k must be >= 1");
    if (pool_multiplier < 1) throw std::invalid_argument("pool_multiplier must be >= 1");
    segmentation.validate();
    filter.validate();
    reranker.validate();
}

// --- DenseIndex ----------------------------------------------------------------

DenseIndex::DenseIndex(std::vector<std::string> chunk_ids, std::vector<EmbeddingVector> vectors)
    : ids_(std::move(chunk_ids)), vectors_(std::move(vectors)) {
    if (ids_.size() != vectors_.size()) {
        throw std::invalid_argument("dense index: ids and vectors differ in length");
    }
}

RankedList DenseIndex::search(const EmbeddingVector& query, int k,
                              const std::string& query_id) const {
    if (k <= 0) throw std::invalid_argument("dense_search requires k >= 1");
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(ids_.size());
    for (size_t i = 0; i < ids_.size(); ++i) {
        scored.emplace_back(ids_[i], cosine(query, vectors_[i]));
    }
    return make_ranked(query_id, "", std::move(scored), k);
}

// --- SparseIndex ---------------------------------------------------------------

SparseIndex::SparseIndex(const std::vector<Chunk>& chunks) {
    ids_.reserve(chunks.size());
    doc_lengths_.reserve(chunks.size());
    long total_len = 0;
    for (size_t i = 0; i < chunks.size(); ++i) {
        ids_.push_back(chunks[i].id);
        std::unordered_map<std::string, long> tf;
        long len = 0;
        for (const std::string& tok : text::tokenize(chunks[i].text)) {
            ++tf[tok];
            ++len;
        }
        doc_lengths_.push_back(len);
        total_len += len;
        for (auto& [term, freq] : tf) postings_[term].push_back({i, freq});
    }
    avg_doc_length_ = ids_.empty() ? 0.0 : static_cast<double>(total_len) / ids_.size();
}

RankedList SparseIndex::search(const std::string& query, int k,
                               const std::string& query_id) const {
    RankedList empty;
    empty.query_id = query_id;
    if (k <= 0 || ids_.empty()) return empty;

    std::set<std::string> terms;
    for (const std::string& tok : text::tokenize(query)) terms.insert(tok);

    const double n = static_cast<double>(ids_.size());
    std::unordered_map<size_t, double> scores;
    for (const std::string& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const Posting& p : it->second) {
            const double tf = static_cast<double>(p.term_frequency);
            const double dl = static_cast<double>(doc_lengths_[p.chunk_index]);
            const double denom = tf + kK1 * (1.0 - kB + kB * dl / avg_doc_length_);
            scores[p.chunk_index] += idf * tf * (kK1 + 1.0) / denom;
        }
    }

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(scores.size());
    for (const auto& [idx, score] : scores) scored.emplace_back(ids_[idx], score);
    return make_ranked(query_id, "", std::move(scored), k);
}

// --- Fusion --------------------------------------------------------------------

RankedList hybrid_fuse(const RankedList& dense, const RankedList& sparse, int k) {
    if (dense.query_id != sparse.query_id) {
        throw std::invalid_argument("hybrid_fuse: query ids differ (" + dense.query_id + " vs " +
                                    sparse.query_id + ")");
    }
    constexpr double kRrfConstant = 60.0;
    std::map<std::string, double> fused;
    for (const RankedList* list : {&dense, &sparse}) {
        for (const RankedEntry& e : list->entries) {
            fused[e.chunk_id] += 1.0 / (kRrfConstant + e.rank);
        }
    }
    std::vector<std::pair<std::string, double>> scored(fused.begin(), fused.end());
    return make_ranked(dense.query_id, dense.retriever_id, std::move(scored), k);
}

// --- Rewriter ------------------------------------------------------------------

std::vector<std::string> TemplateRewriter::rewrite(const std::string& query) {
    return {
        "key facts about " + query,
        query + " explained step by step",
        "background and context for " + query,
        "common questions regarding " + query,
    };
}

RemoteRewriter::RemoteRewriter(std::shared_ptr<HttpAdapterClient> client,
                               std::shared_ptr<AdapterCache> cache)
    : client_(std::move(client)), cache_(std::move(cache)) {}

std::string RemoteRewriter::id() const { return "remote:" + client_->endpoint().model; }

std::vector<std::string> RemoteRewriter::rewrite(const std::string& query) {
    const std::string& model = client_->endpoint().model;
    const std::string& pv = client_->endpoint().prompt_version;
    nlohmann::json raw;
    if (cache_) {
        if (auto hit = cache_->lookup("rewrite", model, pv, query)) raw = *hit;
    }
    if (raw.is_null()) {
        nlohmann::json outputs = client_->call("rewrite", nlohmann::json::array({query}), {});
        if (outputs.size() != 1 || !outputs[0].is_array()) {
            throw AdapterError("rewrite adapter returned malformed outputs");
        }
        raw = outputs[0];
        if (cache_) cache_->store("rewrite", model, pv, query, raw);
    }
    std::vector<std::string> rewrites;
    for (const auto& item : raw) {
        if (item.is_string()) rewrites.push_back(item.get<std::string>());
    }
    return rewrites;
}

std::vector<std::string> rewrite_query(QueryRewriter& rewriter, const std::string& query,
                                       size_t* padded) {
    std::vector<std::string> kept;
    std::unordered_set<std::string> seen;
    for (const std::string& rw : rewriter.rewrite(query)) {
        if (rw.empty() || rw == query) continue;
        if (!seen.insert(rw).second) continue;
        kept.push_back(rw);
        if (kept.size() == 4) break;
    }
    size_t pad = 4 - kept.size();
    if (pad > 0) {
        log_warn("rewriter '" + rewriter.id() + "' returned " + std::to_string(kept.size()) +
                 " usable rewrites for \"" + query + "\"; padding with the original query");
        while (kept.size() < 4) kept.push_back(query);
    }
    if (padded) *padded = pad;
    return kept;
}

// --- Filters -------------------------------------------------------------------

RankedList apply_filters(const RankedList& candidates, const FilterSpec& spec,
                         const DocumentStore& docs, const ChunkStore& chunks,
                         const PoiPercentiles& poi) {
    spec.validate();
    if (!spec.any_enabled()) return candidates;

    const long poi_threshold = spec.poi ? poi.threshold(spec.poi_bottom_percentile) : 0;
    RankedList out;
    out.query_id = candidates.query_id;
    out.retriever_id = candidates.retriever_id;
    for (const RankedEntry& e : candidates.entries) {
        const Chunk& chunk = chunks.at(e.chunk_id);
        const DocMetadata& meta = docs.at(chunk.doc_id).metadata;
        if (spec.quality && !meta.quality_ok) continue;
        if (spec.length && meta.length_chars < static_cast<size_t>(spec.length_threshold_chars))
            continue;
        if (spec.engagement && meta.engagement_count < spec.engagement_threshold) continue;
        if (spec.poi && meta.poi_count <= poi_threshold) continue;
        RankedEntry kept = e;
        kept.rank = static_cast<int>(out.entries.size()) + 1;
        out.entries.push_back(kept);
    }
    return out;
}

// --- Rerankers -----------------------------------------------------------------

namespace {

double jaccard_overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    const size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::set<std::string> token_set(const std::string& s) {
    auto toks = text::tokenize(s);
    return {toks.begin(), toks.end()};
}

// Keeps returned ids that belong to the window (first occurrence each), then
// appends window ids that were not returned, in prior order.
std::vector<std::string> repair_window_order(const std::vector<std::string>& returned,
                                             const std::vector<std::string>& window_ids,
                                             bool* repaired) {
    std::unordered_set<std::string> window_set(window_ids.begin(), window_ids.end());
    std::vector<std::string> result;
    std::unordered_set<std::string> used;
    for (const std::string& id : returned) {
        if (window_set.count(id) && used.insert(id).second) result.push_back(id);
    }
    for (const std::string& id : window_ids) {
        if (used.insert(id).second) result.push_back(id);
    }
    *repaired = (result != returned);
    return result;
}

}  // namespace

std::vector<double> TokenOverlapScorer::score(const std::string& query,
                                              const std::vector<const Chunk*>& chunks) {
    const auto q = token_set(query);
    std::vector<double> out;
    out.reserve(chunks.size());
    for (const Chunk* c : chunks) out.push_back(jaccard_overlap(q, token_set(c->text)));
    return out;
}

std::vector<std::string> TokenOverlapListwise::order(const std::string& query,
                                                     const std::vector<const Chunk*>& window) {
    const auto q = token_set(query);
    std::vector<std::pair<double, size_t>> scored;
    scored.reserve(window.size());
    for (size_t i = 0; i < window.size(); ++i) {
        scored.emplace_back(jaccard_overlap(q, token_set(window[i]->text)), i);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    out.reserve(window.size());
    for (const auto& [s, i] : scored) out.push_back(window[i]->id);
    return out;
}

std::vector<std::string> KeyedListwise::order(const std::string&,
                                              const std::vector<const Chunk*>& window) {
    std::vector<std::pair<double, size_t>> scored;
    scored.reserve(window.size());
    for (size_t i = 0; i < window.size(); ++i) {
        auto it = keys_.find(window[i]->id);
        scored.emplace_back(it == keys_.end() ? 0.0 : it->second, i);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    out.reserve(window.size());
    for (const auto& [s, i] : scored) out.push_back(window[i]->id);
    return out;
}

RemotePointwiseScorer::RemotePointwiseScorer(std::shared_ptr<HttpAdapterClient> client,
                                             std::shared_ptr<AdapterCache> cache)
    : client_(std::move(client)), cache_(std::move(cache)) {}

std::string RemotePointwiseScorer::id() const { return "remote:" + client_->endpoint().model; }

std::vector<double> RemotePointwiseScorer::score(const std::string& query,
                                                 const std::vector<const Chunk*>& chunks) {
    const std::string& model = client_->endpoint().model;
    const std::string& pv = client_->endpoint().prompt_version;

    std::vector<std::string> inputs(chunks.size());
    std::vector<double> out(chunks.size(), 0.0);
    std::vector<size_t> missing;
    for (size_t i = 0; i < chunks.size(); ++i) {
        inputs[i] = nlohmann::json{{"query", query}, {"chunk", chunks[i]->text}}.dump();
        if (cache_) {
            if (auto hit = cache_->lookup("rerank_pointwise", model, pv, inputs[i])) {
                out[i] = hit->get<double>();
                continue;
            }
        }
        missing.push_back(i);
    }
    if (!missing.empty()) {
        nlohmann::json batch = nlohmann::json::array();
        for (size_t i : missing) batch.push_back(inputs[i]);
        nlohmann::json outputs = client_->call("rerank_pointwise", batch, {});
        if (outputs.size() != missing.size()) {
            throw AdapterError("pointwise adapter returned " + std::to_string(outputs.size()) +
                               " outputs for " + std::to_string(missing.size()) + " inputs");
        }
        for (size_t j = 0; j < missing.size(); ++j) {
            if (!outputs[j].is_number()) throw AdapterError("pointwise adapter output not numeric");
            out[missing[j]] = outputs[j].get<double>();
            if (cache_) cache_->store("rerank_pointwise", model, pv, inputs[missing[j]], outputs[j]);
        }
    }
    return out;
}

RemoteListwiseReranker::RemoteListwiseReranker(std::shared_ptr<HttpAdapterClient> client,
                                               std::shared_ptr<AdapterCache> cache)
    : client_(std::move(client)), cache_(std::move(cache)) {}

std::string RemoteListwiseReranker::id() const { return "remote:" + client_->endpoint().model; }

std::vector<std::string> RemoteListwiseReranker::order(const std::string& query,
                                                       const std::vector<const Chunk*>& window) {
    const std::string& model = client_->endpoint().model;
    const std::string& pv = client_->endpoint().prompt_version;
    nlohmann::json candidates = nlohmann::json::array();
    for (const Chunk* c : window) candidates.push_back({{"id", c->id}, {"text", c->text}});
    const std::string input = nlohmann::json{{"query", query}, {"candidates", candidates}}.dump();

    nlohmann::json raw;
    if (cache_) {
        if (auto hit = cache_->lookup("rerank_listwise", model, pv, input)) raw = *hit;
    }
    if (raw.is_null()) {
        nlohmann::json outputs = client_->call("rerank_listwise", nlohmann::json::array({input}), {});
        if (outputs.size() != 1 || !outputs[0].is_array()) {
            throw AdapterError("listwise adapter returned malformed outputs");
        }
        raw = outputs[0];
        if (cache_) cache_->store("rerank_listwise", model, pv, input, raw);
    }
    std::vector<std::string> out;
    for (const auto& item : raw) {
        if (item.is_string()) out.push_back(item.get<std::string>());
    }
    return out;
}

RankedList rerank(const std::string& query, const RankedList& list, const RerankerSpec& spec,
                  PointwiseScorer* pointwise, ListwiseReranker* listwise,
                  const ChunkStore& chunks, RerankStats* stats) {
    spec.validate();
    if (spec.kind == RerankKind::none || list.entries.empty()) return list;

    RankedList out = list;
    const size_t n = out.entries.size();

    if (spec.kind == RerankKind::pointwise) {
        if (!pointwise) throw std::runtime_error("pointwise reranker requested but not registered");
        std::vector<const Chunk*> ptrs;
        ptrs.reserve(n);
        for (const RankedEntry& e : out.entries) ptrs.push_back(&chunks.at(e.chunk_id));
        const std::vector<double> scores = pointwise->score(query, ptrs);
        if (stats) ++stats->pointwise_calls;
        if (scores.size() != n) throw std::runtime_error("pointwise scorer output size mismatch");
        std::vector<size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        // stable: ties keep prior rank order
        std::stable_sort(idx.begin(), idx.end(),
                         [&](size_t a, size_t b) { return scores[a] > scores[b]; });
        std::vector<RankedEntry> reordered;
        reordered.reserve(n);
        for (size_t i = 0; i < n; ++i) {
            RankedEntry e = out.entries[idx[i]];
            e.score = scores[idx[i]];
            e.rank = static_cast<int>(i) + 1;
            reordered.push_back(std::move(e));
        }
        out.entries = std::move(reordered);
        return out;
    }

    // sliding_window: windows advance from the tail of the list toward the
    // head by (window - overlap); the overlap region carries items promoted
    // by one window into the next one.
    if (!listwise) throw std::runtime_error("listwise reranker requested but not registered");
    const size_t w = std::min<size_t>(static_cast<size_t>(spec.window), n);
    const size_t step = static_cast<size_t>(spec.window - spec.overlap);
    size_t start = n > w ? n - w : 0;
    while (true) {
        std::vector<const Chunk*> ptrs;
        std::vector<std::string> window_ids;
        ptrs.reserve(w);
        window_ids.reserve(w);
        for (size_t i = start; i < start + w; ++i) {
            ptrs.push_back(&chunks.at(out.entries[i].chunk_id));
            window_ids.push_back(out.entries[i].chunk_id);
        }
        std::vector<std::string> returned = listwise->order(query, ptrs);
        if (stats) {
            ++stats->listwise_calls;
            stats->windows.emplace_back(static_cast<int>(start) + 1,
                                        static_cast<int>(start + w));
        }
        bool repaired = false;
        std::vector<std::string> final_order = repair_window_order(returned, window_ids, &repaired);
        if (repaired) {
            if (stats) ++stats->repairs;
            log_warn("listwise reranker '" + listwise->id() +
                     "' returned a non-permutation for query '" + list.query_id +
                     "'; repaired by appending missing ids in prior order");
        }
        std::unordered_map<std::string, RankedEntry> by_id;
        for (size_t i = start; i < start + w; ++i) {
            by_id.emplace(out.entries[i].chunk_id, out.entries[i]);
        }
        for (size_t i = 0; i < w; ++i) {
            out.entries[start + i] = by_id.at(final_order[i]);
        }
        if (start == 0) break;
        start = start >= step ? start - step : 0;
    }
    for (size_t i = 0; i < n; ++i) {
        out.entries[i].rank = static_cast<int>(i) + 1;
        out.entries[i].score = static_cast<double>(n - i) / static_cast<double>(n);
    }
    return out;
}

// --- RetrievalEngine -------------------------------------------------------------

RetrievalEngine::RetrievalEngine(std::vector<Document> docs, size_t build_workers)
    : build_workers_(build_workers == 0 ? 1 : build_workers) {
    for (Document& d : docs) docs_.add(std::move(d));
    poi_ = PoiPercentiles::from_documents(docs_.all());
}

void RetrievalEngine::register_embedder(std::shared_ptr<Embedder> embedder) {
    embedders_[embedder->id()] = std::move(embedder);
}

void RetrievalEngine::set_rewriter(std::shared_ptr<QueryRewriter> rewriter) {
    rewriter_ = std::move(rewriter);
}

void RetrievalEngine::set_pointwise(std::shared_ptr<PointwiseScorer> scorer) {
    pointwise_ = std::move(scorer);
}

void RetrievalEngine::set_listwise(std::shared_ptr<ListwiseReranker> reranker) {
    listwise_ = std::move(reranker);
}

bool RetrievalEngine::has_chunking(const std::string& strategy_id) const {
    return chunkings_.count(strategy_id) > 0;
}

const ChunkStore& RetrievalEngine::chunks(const std::string& strategy_id) const {
    auto it = chunkings_.find(strategy_id);
    if (it == chunkings_.end()) {
        throw std::invalid_argument("no chunking built for segmentation " + strategy_id);
    }
    return it->second;
}

void RetrievalEngine::prepare(const RetrieverSpec& spec) {
    spec.validate();
    const std::string strategy = spec.segmentation.id();

    if (!chunkings_.count(strategy)) {
        const auto& docs = docs_.all();
        std::vector<std::vector<Chunk>> per_doc(docs.size());
        parallel_for(docs.size(), build_workers_, [&](size_t i) {
            per_doc[i] = segment_document(docs[i], spec.segmentation);
            validate_chunking(docs[i], per_doc[i]);
        });
        ChunkStore store;
        for (const auto& chunks : per_doc) store.add(chunks);
        chunkings_.emplace(strategy, std::move(store));
    }

    if (spec.mode == RetrievalMode::hybrid && !sparse_.count(strategy)) {
        sparse_.emplace(strategy, SparseIndex(chunkings_.at(strategy).all()));
    }

    auto emb_it = embedders_.find(spec.embedder_id);
    if (emb_it == embedders_.end()) {
        throw std::invalid_argument("embedder not registered: " + spec.embedder_id);
    }
    const std::string dense_key = strategy + '\x1f' + spec.embedder_id;
    if (!dense_.count(dense_key)) {
        const auto& all = chunkings_.at(strategy).all();
        std::vector<std::string> ids(all.size());
        std::vector<EmbeddingVector> vectors(all.size());
        Embedder& embedder = *emb_it->second;
        parallel_for(all.size(), build_workers_, [&](size_t i) {
            ids[i] = all[i].id;
            vectors[i] = embedder.embed(all[i].text);
        });
        dense_.emplace(dense_key, DenseIndex(std::move(ids), std::move(vectors)));
    }
}

RankedList RetrievalEngine::recall(const RetrieverSpec& spec, const std::string& query_text,
                                   const std::string& query_id, int depth,
                                   PipelineStats* stats) const {
    if (stats) {
        ++stats->recall_calls;
        stats->recall_depths.push_back(depth);
    }
    const std::string strategy = spec.segmentation.id();
    const std::string dense_key = strategy + '\x1f' + spec.embedder_id;
    auto dense_it = dense_.find(dense_key);
    if (dense_it == dense_.end()) {
        throw std::runtime_error("dense index not built for " + strategy + "/" + spec.embedder_id);
    }
    Embedder& embedder = *embedders_.at(spec.embedder_id);
    RankedList dense_hits = dense_it->second.search(embedder.embed(query_text), depth, query_id);
    if (spec.mode == RetrievalMode::dense) return dense_hits;

    auto sparse_it = sparse_.find(strategy);
    if (sparse_it == sparse_.end()) {
        throw std::runtime_error("sparse index not built for " + strategy);
    }
    RankedList sparse_hits = sparse_it->second.search(query_text, depth, query_id);
    return hybrid_fuse(dense_hits, sparse_hits, depth);
}

RankedList RetrievalEngine::run_retriever(const RetrieverSpec& spec, const Query& query,
                                          PipelineStats* stats) const {
    spec.validate();
    const std::string strategy = spec.segmentation.id();

    auto stage_error = [&](const char* stage, const std::exception& e) -> std::runtime_error {
        return std::runtime_error("retriever '" + spec.id + "' stage '" + stage +
                                  "': " + e.what());
    };

    RankedList current;
    try {
        if (spec.rewriter) {
            if (!rewriter_) throw std::runtime_error("rewriter enabled but none registered");
            size_t padded = 0;
            const std::vector<std::string> rewrites = rewrite_query(*rewriter_, query.text, &padded);
            if (stats) stats->rewrite_padding += padded;

            std::vector<RankedList> lists;
            lists.push_back(recall(spec, query.text, query.id, kRewriterRecallDepth, stats));
            for (const std::string& rw : rewrites) {
                lists.push_back(recall(spec, rw, query.id, kRewriterRecallDepth, stats));
            }
            // Merge by best rank across the original + rewrites, deduplicated.
            std::map<std::string, int> best_rank;
            for (const RankedList& l : lists) {
                for (const RankedEntry& e : l.entries) {
                    auto [it, inserted] = best_rank.emplace(e.chunk_id, e.rank);
                    if (!inserted && e.rank < it->second) it->second = e.rank;
                }
            }
            std::vector<std::pair<std::string, double>> scored;
            scored.reserve(best_rank.size());
            for (const auto& [id, rank] : best_rank) scored.emplace_back(id, 1.0 / rank);
            current = make_ranked(query.id, spec.id, std::move(scored));
        } else {
            const long depth = static_cast<long>(spec.pool_multiplier) * spec.k;
            current = recall(spec, query.text, query.id, static_cast<int>(depth), stats);
        }
        validate_ranked_list(current, true);
    } catch (const std::exception& e) {
        throw stage_error("recall", e);
    }

    if (spec.filter.any_enabled()) {
        try {
            current = apply_filters(current, spec.filter, docs_, chunks(strategy), poi_);
            validate_ranked_list(current, true);
        } catch (const std::exception& e) {
            throw stage_error("filter", e);
        }
    }

    if (spec.reranker.kind != RerankKind::none) {
        try {
            current = rerank(query.text, current, spec.reranker, pointwise_.get(),
                             listwise_.get(), chunks(strategy), stats ? &stats->rerank : nullptr);
            validate_ranked_list(current, false);
        } catch (const std::exception& e) {
            throw stage_error("rerank", e);
        }
    }

    try {
        if (current.entries.size() > static_cast<size_t>(spec.k)) {
            current.entries.resize(static_cast<size_t>(spec.k));
        }
        current.retriever_id = spec.id;
        current.query_id = query.id;
        validate_ranked_list(current, false);
    } catch (const std::exception& e) {
        throw stage_error("truncate", e);
    }
    return current;
}

}  // namespace pooleval
