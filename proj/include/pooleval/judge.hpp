#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pooleval/adapter.hpp"
#include "pooleval/corpus.hpp"

namespace pooleval {

struct Judgment {
    std::string query_id;
    std::string chunk_id;
    // Unset when the remote verdict stayed unparseable after the repair
    // retry; such chunks are excluded from the pool and the run is partial.
    std::optional<bool> relevant;
    std::string judge_id;
    std::string prompt_version;

    bool judged() const { return relevant.has_value(); }
};

struct ExtractedFact {
    std::string text;  // equal to the chunk substring at span
    Span span;         // code points into the chunk text
};

struct FactExtraction {
    std::string query_id;
    std::string chunk_id;
    std::vector<ExtractedFact> facts;
};

class RelevanceJudge {
public:
    virtual ~RelevanceJudge() = default;
    virtual std::string id() const = 0;
    virtual std::string prompt_version() const = 0;
    virtual Judgment judge(const Query& query, const Chunk& chunk) = 0;
};

class FactExtractor {
public:
    virtual ~FactExtractor() = default;
    virtual std::string id() const = 0;
    virtual std::string prompt_version() const = 0;
    virtual FactExtraction extract(const Query& query, const Chunk& chunk) = 0;
};

// Planted-fact oracle: a chunk is relevant iff it contains any fact token of
// the query. Fact tokens are the distinctive marker words inside the planted
// fact sentences (the full sentence when no marker is present).
class OracleJudge : public RelevanceJudge {
public:
    explicit OracleJudge(const std::vector<Query>& queries);

    std::string id() const override { return "oracle-judge"; }
    std::string prompt_version() const override { return "oracle-v1"; }
    Judgment judge(const Query& query, const Chunk& chunk) override;

    // Distinctive marker inside a planted fact sentence, or the whole
    // sentence when none stands out. Shared with TrueGT computation.
    static std::string fact_token(const std::string& fact_sentence);

private:
    std::map<std::string, std::vector<std::string>> tokens_by_query_;
};

// Extracts the planted fact sentences (falling back to the bare fact token
// when segmentation cut the sentence) with exact spans into the chunk.
class OracleExtractor : public FactExtractor {
public:
    explicit OracleExtractor(const std::vector<Query>& queries);

    std::string id() const override { return "oracle-extractor"; }
    std::string prompt_version() const override { return "oracle-v1"; }
    FactExtraction extract(const Query& query, const Chunk& chunk) override;

private:
    std::map<std::string, std::vector<std::string>> facts_by_query_;
};

// Flips the inner oracle's verdict with the given probability; used only by
// the non-asserting noisy mode of the verification pipeline. Deterministic
// per (seed, query, chunk) so reruns see the same noise.
class NoisyJudge : public RelevanceJudge {
public:
    NoisyJudge(std::shared_ptr<RelevanceJudge> inner, double flip_probability, uint64_t seed);

    std::string id() const override;
    std::string prompt_version() const override { return inner_->prompt_version(); }
    Judgment judge(const Query& query, const Chunk& chunk) override;

private:
    std::shared_ptr<RelevanceJudge> inner_;
    double flip_probability_;
    uint64_t seed_;
};

struct JudgePrompts {
    std::string judge_template =
        "Decide whether the chunk is relevant to the query. Answer yes or no.\n"
        "Query: {query}\nChunk: {chunk}";
    std::string extract_template =
        "List the minimal text spans of the chunk that answer the query, one per line, "
        "verbatim from the chunk.\nQuery: {query}\nChunk: {chunk}";
};

class RemoteJudge : public RelevanceJudge {
public:
    RemoteJudge(std::shared_ptr<HttpAdapterClient> client, JudgePrompts prompts);

    std::string id() const override;
    std::string prompt_version() const override;
    Judgment judge(const Query& query, const Chunk& chunk) override;

    // "yes"/"no"/"true"/"false" (case-insensitive, leading verdict word)
    // or {"relevant": bool}; anything else is unparseable.
    static std::optional<bool> parse_verdict(const nlohmann::json& output);

private:
    std::shared_ptr<HttpAdapterClient> client_;
    JudgePrompts prompts_;
};

// Validates remote extractions against the chunk: a returned fact must match
// a chunk substring exactly or fuzzily (normalized similarity >= 0.9); the
// accepted fact text is the matched chunk substring. If nothing survives,
// the whole chunk becomes the single fact.
class RemoteExtractor : public FactExtractor {
public:
    RemoteExtractor(std::shared_ptr<HttpAdapterClient> client, JudgePrompts prompts);

    std::string id() const override;
    std::string prompt_version() const override;
    FactExtraction extract(const Query& query, const Chunk& chunk) override;

    static constexpr double kFuzzyThreshold = 0.9;

private:
    std::shared_ptr<HttpAdapterClient> client_;
    JudgePrompts prompts_;
};

// Locates `needle` in `haystack` exactly, or fuzzily over same-length code
// point windows when exact search fails. Returns the matched span (code
// points) when the best window reaches `threshold`.
std::optional<Span> locate_span(const std::string& haystack, const std::string& needle,
                                double threshold);

// Cache decorators. Keys are content hashes of (kind, judge id, prompt
// version, query text + chunk text), so re-judging identical content never
// re-invokes the inner adapter.
class CachedJudge : public RelevanceJudge {
public:
    CachedJudge(std::shared_ptr<RelevanceJudge> inner, std::shared_ptr<AdapterCache> cache);

    std::string id() const override { return inner_->id(); }
    std::string prompt_version() const override { return inner_->prompt_version(); }
    Judgment judge(const Query& query, const Chunk& chunk) override;

    size_t inner_calls() const { return inner_calls_; }

private:
    std::shared_ptr<RelevanceJudge> inner_;
    std::shared_ptr<AdapterCache> cache_;
    std::atomic<size_t> inner_calls_{0};
};

class CachedExtractor : public FactExtractor {
public:
    CachedExtractor(std::shared_ptr<FactExtractor> inner, std::shared_ptr<AdapterCache> cache);

    std::string id() const override { return inner_->id(); }
    std::string prompt_version() const override { return inner_->prompt_version(); }
    FactExtraction extract(const Query& query, const Chunk& chunk) override;

    size_t inner_calls() const { return inner_calls_; }

private:
    std::shared_ptr<FactExtractor> inner_;
    std::shared_ptr<AdapterCache> cache_;
    std::atomic<size_t> inner_calls_{0};
};

// Audit export: {"query_id","chunk_id","relevant","judge_id","prompt_version"}.
void dump_judgments_jsonl(const std::vector<Judgment>& judgments,
                          const std::filesystem::path& path);

}  // namespace pooleval
