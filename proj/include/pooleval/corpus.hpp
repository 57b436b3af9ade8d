#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace pooleval {

struct DocMetadata {
    size_t length_chars = 0;  // code points in body; recomputed at load
    long engagement_count = 0;
    long poi_count = 0;
    bool quality_ok = true;
};

struct Heading {
    int level = 0;
    std::string text;
};

struct Document {
    std::string id;
    std::string title;
    std::vector<Heading> title_path;  // headings found in body, in order
    std::string body;
    DocMetadata metadata;
};

struct Query {
    std::string id;
    std::string text;
    // Planted fact sentences, present only for synthetic/offline corpora.
    // Drive the oracle judge and extractor; empty for real query sets.
    std::vector<std::string> facts;
};

// Half-open code-point interval into a document body (or a chunk text).
struct Span {
    size_t start = 0;
    size_t end = 0;
};

enum class SegStrategy { original, nms, nmns };

std::string to_string(SegStrategy s);
SegStrategy seg_strategy_from_string(const std::string& s);

struct SegmentationSpec {
    SegStrategy strategy = SegStrategy::original;
    size_t min_merge_len = 100;  // chars (code points)
    size_t max_chunk_len = 500;

    // Derived id, embedding only the parameters the strategy actually uses,
    // e.g. "original-m100-x500", "nms-x500", "nmns".
    std::string id() const;
    void validate() const;  // throws std::invalid_argument
};

struct Chunk {
    std::string id;
    std::string doc_id;
    Span span;  // code points into the document body
    std::string text;
    int heading_level = 0;
    std::string strategy_id;
};

// --- Segmentation -----------------------------------------------------------

// Body is parsed as markdown ATX headings: a line of 1-6 '#' followed by a
// space opens a section at that level; a section is the trimmed text between
// one heading line and the next (any level). Text before the first heading is
// a level-0 section. A body without headings is a single section.
//
//   nmns:     heading partition only
//   nms:      partition + secondary split of chunks longer than max_chunk_len
//   original: partition + merge of small same-level neighbors, then split
//
// Chunk ids are doc_id:strategy_id:NNNNN by final ordinal. Throws
// std::invalid_argument on an empty body.
std::vector<Chunk> segment_document(const Document& doc, const SegmentationSpec& spec);

// Repeatedly merges a chunk shorter than min_merge_len into its immediate
// successor while both share heading_level, until a fixed point. The merged
// span is the covering interval and the merged text is the body substring of
// that interval, so the separator between the parts is the document's own
// delimiter text (typically the heading line). Ordinal ids are reassigned.
std::vector<Chunk> merge_small_chunks(const Document& doc, std::vector<Chunk> chunks,
                                      size_t min_merge_len);

// Splits a chunk longer than max_chunk_len into pieces of at most
// max_chunk_len code points. Split points prefer the position right after the
// last sentence terminator within the limit, then the last whitespace, then a
// hard cut. Pieces concatenate to the original text exactly.
std::vector<Chunk> split_long_chunk(const Chunk& chunk, size_t max_chunk_len);

// Internal reference used by split_long_chunk and its tests: last split
// position <= limit in [from+1, from+limit], by terminator > whitespace >
// hard cut, scanning the code points of `cps`.
size_t find_split_point(const std::vector<uint32_t>& cps, size_t from, size_t limit);

// Checks every stated chunking invariant against the source document:
// non-empty texts, sorted non-overlapping spans, text consistent with span
// (exact body substring), and the partition property (body is reproduced by
// the inter-span gaps plus the chunk texts). Throws std::runtime_error with a
// description on the first violation.
void validate_chunking(const Document& doc, const std::vector<Chunk>& chunks);

// --- Corpus containers ------------------------------------------------------

// Corpus-wide POI-count distribution, computed once at ingest. The q-th
// percentile threshold is the value at rank ceil(q*n) in the ascending sort;
// the POI filter removes documents with poi_count <= threshold(q).
struct PoiPercentiles {
    std::vector<long> sorted_counts;

    static PoiPercentiles from_documents(const std::vector<Document>& docs);
    long threshold(double q) const;  // q in (0,1)
};

class DocumentStore {
public:
    void add(Document doc);
    const Document* find(const std::string& doc_id) const;
    const Document& at(const std::string& doc_id) const;
    const std::vector<Document>& all() const { return docs_; }
    size_t size() const { return docs_.size(); }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, size_t> by_id_;
};

class ChunkStore {
public:
    void add(const std::vector<Chunk>& chunks);
    const Chunk* find(const std::string& chunk_id) const;
    const Chunk& at(const std::string& chunk_id) const;
    size_t size() const { return chunks_.size(); }
    const std::vector<Chunk>& all() const { return chunks_; }

private:
    std::vector<Chunk> chunks_;
    std::unordered_map<std::string, size_t> by_id_;
};

// --- Line-delimited file formats ---------------------------------------------

// Corpus records: {"id","title","body","metadata":{...}}. length_chars is
// recomputed from the body; unknown metadata keys are ignored.
std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path);
void dump_corpus_jsonl(const std::vector<Document>& docs, const std::filesystem::path& path);

// Query records: {"id","text"} with optional "facts":[...].
std::vector<Query> load_queries_jsonl(const std::filesystem::path& path);
void dump_queries_jsonl(const std::vector<Query>& queries, const std::filesystem::path& path);

// Chunk dump records: {"id","doc_id","start","end","strategy_id"}; text is
// re-derivable from the document body.
void dump_chunks_jsonl(const std::vector<Chunk>& chunks, const std::filesystem::path& path);

}  // namespace pooleval
