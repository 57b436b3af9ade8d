#include "pooleval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pooleval/jsonl.hpp"
#include "pooleval/text.hpp"
#include "pooleval/utf8.hpp"

namespace pooleval {

std::string to_string(SegStrategy s) {
    switch (s) {
        case SegStrategy::original: return "original";
        case SegStrategy::nms: return "nms";
        case SegStrategy::nmns: return "nmns";
    }
    return "original";
}

SegStrategy seg_strategy_from_string(const std::string& s) {
    if (s == "original") return SegStrategy::original;
    if (s == "nms") return SegStrategy::nms;
    if (s == "nmns") return SegStrategy::nmns;
    throw std::invalid_argument("unknown segmentation strategy: " + s);
}

std::string SegmentationSpec::id() const {
    switch (strategy) {
        case SegStrategy::original:
            return "original-m" + std::to_string(min_merge_len) + "-x" + std::to_string(max_chunk_len);
        case SegStrategy::nms:
            return "nms-x" + std::to_string(max_chunk_len);
        case SegStrategy::nmns:
            return "nmns";
    }
    return "original";
}

void SegmentationSpec::validate() const {
    if (min_merge_len == 0 || min_merge_len >= max_chunk_len) {
        throw std::invalid_argument("segmentation requires 0 < min_merge_len < max_chunk_len");
    }
}

namespace {

struct Piece {
    Span span;  // cp interval into the body, trimmed
    int heading_level = 0;
};

// Returns heading level (1-6) if the cp range [start, end) is an ATX heading
// line, 0 otherwise.
int heading_level_of_line(const std::vector<uint32_t>& cps, size_t start, size_t end) {
    size_t i = start;
    while (i < end && cps[i] == '#') ++i;
    const size_t hashes = i - start;
    if (hashes < 1 || hashes > 6) return 0;
    if (i == end || cps[i] == ' ' || cps[i] == '\t') return static_cast<int>(hashes);
    return 0;
}

struct ParsedBody {
    std::vector<uint32_t> cps;
    std::vector<Piece> sections;
    std::vector<Heading> headings;
};

ParsedBody parse_sections(const std::string& body) {
    ParsedBody out;
    for (size_t p = 0; p < body.size();) out.cps.push_back(utf8::decode(body, p));
    const auto& cps = out.cps;

    auto trim = [&](size_t s, size_t e) -> Span {
        while (s < e && text::is_space_cp(cps[s])) ++s;
        while (e > s && text::is_space_cp(cps[e - 1])) --e;
        return {s, e};
    };

    size_t section_start = 0;
    int section_level = 0;
    size_t line_start = 0;
    const size_t n = cps.size();
    while (line_start <= n) {
        size_t line_end = line_start;
        while (line_end < n && cps[line_end] != '\n') ++line_end;
        const int level = line_start < n ? heading_level_of_line(cps, line_start, line_end) : 0;
        if (level > 0) {
            const Span sect = trim(section_start, line_start);
            if (sect.start < sect.end) out.sections.push_back({sect, section_level});
            size_t text_start = line_start;
            while (text_start < line_end && cps[text_start] == '#') ++text_start;
            const Span htext = trim(text_start, line_end);
            std::string heading_text;
            for (size_t i = htext.start; i < htext.end; ++i) utf8::append(heading_text, cps[i]);
            out.headings.push_back({level, heading_text});
            section_start = line_end < n ? line_end + 1 : n;
            section_level = level;
        }
        if (line_end >= n) break;
        line_start = line_end + 1;
    }
    const Span last = trim(section_start, n);
    if (last.start < last.end) out.sections.push_back({last, section_level});
    return out;
}

std::string slice_to_string(const std::vector<uint32_t>& cps, Span span) {
    std::string out;
    for (size_t i = span.start; i < span.end; ++i) utf8::append(out, cps[i]);
    return out;
}

size_t piece_len(const Piece& p) { return p.span.end - p.span.start; }

// Left-to-right merge with in-place re-check; reaches the fixed point of the
// rule "a chunk shorter than min_merge_len merges into its successor when
// both share heading_level".
void merge_pieces(std::vector<Piece>& pieces, size_t min_merge_len) {
    size_t i = 0;
    while (pieces.size() > 1 && i + 1 < pieces.size()) {
        if (piece_len(pieces[i]) < min_merge_len &&
            pieces[i].heading_level == pieces[i + 1].heading_level) {
            pieces[i].span.end = pieces[i + 1].span.end;
            pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        } else {
            ++i;
        }
    }
}

std::vector<Piece> split_piece(const std::vector<uint32_t>& cps, const Piece& piece,
                               size_t max_chunk_len) {
    if (piece_len(piece) <= max_chunk_len) return {piece};
    std::vector<Piece> out;
    size_t pos = piece.span.start;
    while (piece.span.end - pos > max_chunk_len) {
        const size_t cut = find_split_point(cps, pos, max_chunk_len);
        out.push_back({{pos, cut}, piece.heading_level});
        pos = cut;
    }
    out.push_back({{pos, piece.span.end}, piece.heading_level});
    return out;
}

std::string chunk_id(const std::string& doc_id, const std::string& strategy_id, size_t ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05zu", ordinal);
    return doc_id + ":" + strategy_id + ":" + buf;
}

std::vector<Chunk> finalize(const Document& doc, const std::string& strategy_id,
                            const std::vector<uint32_t>& cps, const std::vector<Piece>& pieces) {
    std::vector<Chunk> chunks;
    chunks.reserve(pieces.size());
    for (size_t i = 0; i < pieces.size(); ++i) {
        Chunk c;
        c.id = chunk_id(doc.id, strategy_id, i);
        c.doc_id = doc.id;
        c.span = pieces[i].span;
        c.text = slice_to_string(cps, pieces[i].span);
        c.heading_level = pieces[i].heading_level;
        c.strategy_id = strategy_id;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

}  // namespace

size_t find_split_point(const std::vector<uint32_t>& cps, size_t from, size_t limit) {
    const size_t lim = std::min(from + limit, cps.size());
    size_t best_terminator = 0, best_space = 0;
    for (size_t s = from + 1; s <= lim; ++s) {
        const uint32_t prev = cps[s - 1];
        if (text::is_sentence_terminator(prev)) best_terminator = s;
        if (text::is_space_cp(prev)) best_space = s;
    }
    return best_terminator ? best_terminator : (best_space ? best_space : lim);
}

std::vector<Chunk> segment_document(const Document& doc, const SegmentationSpec& spec) {
    spec.validate();
    if (doc.body.empty()) throw std::invalid_argument("empty document: " + doc.id);

    ParsedBody parsed = parse_sections(doc.body);
    std::vector<Piece> pieces = parsed.sections;
    if (pieces.empty()) {
        // Whitespace/heading-only body yields no chunkable text.
        return {};
    }

    if (spec.strategy == SegStrategy::original) {
        merge_pieces(pieces, spec.min_merge_len);
    }
    if (spec.strategy == SegStrategy::original || spec.strategy == SegStrategy::nms) {
        std::vector<Piece> split_out;
        for (const Piece& p : pieces) {
            auto parts = split_piece(parsed.cps, p, spec.max_chunk_len);
            split_out.insert(split_out.end(), parts.begin(), parts.end());
        }
        pieces = std::move(split_out);
    }
    return finalize(doc, spec.id(), parsed.cps, pieces);
}

std::vector<Chunk> merge_small_chunks(const Document& doc, std::vector<Chunk> chunks,
                                      size_t min_merge_len) {
    if (chunks.empty()) return chunks;
    std::vector<uint32_t> cps;
    for (size_t p = 0; p < doc.body.size();) cps.push_back(utf8::decode(doc.body, p));

    std::vector<Piece> pieces;
    pieces.reserve(chunks.size());
    for (const Chunk& c : chunks) pieces.push_back({c.span, c.heading_level});
    merge_pieces(pieces, min_merge_len);
    return finalize(doc, chunks.front().strategy_id, cps, pieces);
}

std::vector<Chunk> split_long_chunk(const Chunk& chunk, size_t max_chunk_len) {
    if (max_chunk_len == 0) throw std::invalid_argument("max_chunk_len must be positive");
    std::vector<uint32_t> cps;
    for (size_t p = 0; p < chunk.text.size();) cps.push_back(utf8::decode(chunk.text, p));
    if (cps.size() <= max_chunk_len) return {chunk};

    std::vector<Chunk> out;
    size_t pos = 0, ordinal = 0;
    while (pos < cps.size()) {
        size_t cut = cps.size();
        if (cps.size() - pos > max_chunk_len) cut = find_split_point(cps, pos, max_chunk_len);
        Chunk piece;
        piece.id = chunk.id + "." + std::to_string(ordinal++);
        piece.doc_id = chunk.doc_id;
        piece.span = {chunk.span.start + pos, chunk.span.start + cut};
        for (size_t i = pos; i < cut; ++i) utf8::append(piece.text, cps[i]);
        piece.heading_level = chunk.heading_level;
        piece.strategy_id = chunk.strategy_id;
        out.push_back(std::move(piece));
        pos = cut;
    }
    return out;
}

void validate_chunking(const Document& doc, const std::vector<Chunk>& chunks) {
    const utf8::Index body(doc.body);
    std::string rebuilt;
    size_t cursor = 0;
    for (size_t i = 0; i < chunks.size(); ++i) {
        const Chunk& c = chunks[i];
        if (c.text.empty()) throw std::runtime_error("chunk " + c.id + ": empty text");
        if (c.span.start >= c.span.end || c.span.end > body.cp_length()) {
            throw std::runtime_error("chunk " + c.id + ": bad span");
        }
        if (c.span.start < cursor) {
            throw std::runtime_error("chunk " + c.id + ": span overlaps or is out of order");
        }
        if (std::string(body.slice(c.span.start, c.span.end)) != c.text) {
            throw std::runtime_error("chunk " + c.id + ": text does not match body span");
        }
        rebuilt += body.slice(cursor, c.span.start);  // delimiter text between spans
        rebuilt += c.text;
        cursor = c.span.end;
    }
    rebuilt += body.slice(cursor, body.cp_length());
    if (rebuilt != doc.body) {
        throw std::runtime_error("chunking of " + doc.id + " does not partition the body");
    }
}

// --- PoiPercentiles ----------------------------------------------------------

PoiPercentiles PoiPercentiles::from_documents(const std::vector<Document>& docs) {
    PoiPercentiles p;
    p.sorted_counts.reserve(docs.size());
    for (const auto& d : docs) p.sorted_counts.push_back(d.metadata.poi_count);
    std::sort(p.sorted_counts.begin(), p.sorted_counts.end());
    return p;
}

long PoiPercentiles::threshold(double q) const {
    if (q <= 0.0 || q >= 1.0) throw std::invalid_argument("percentile must be in (0,1)");
    if (sorted_counts.empty()) return 0;
    const auto n = static_cast<double>(sorted_counts.size());
    auto rank = static_cast<size_t>(std::ceil(q * n));
    if (rank == 0) rank = 1;
    return sorted_counts[std::min(rank, sorted_counts.size()) - 1];
}

// --- Stores ------------------------------------------------------------------

void DocumentStore::add(Document doc) {
    if (by_id_.count(doc.id)) throw std::invalid_argument("duplicate document id: " + doc.id);
    by_id_[doc.id] = docs_.size();
    docs_.push_back(std::move(doc));
}

const Document* DocumentStore::find(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const Document& DocumentStore::at(const std::string& doc_id) const {
    const Document* d = find(doc_id);
    if (!d) throw std::invalid_argument("unknown document id: " + doc_id);
    return *d;
}

void ChunkStore::add(const std::vector<Chunk>& chunks) {
    for (const Chunk& c : chunks) {
        if (by_id_.count(c.id)) throw std::invalid_argument("duplicate chunk id: " + c.id);
        by_id_[c.id] = chunks_.size();
        chunks_.push_back(c);
    }
}

const Chunk* ChunkStore::find(const std::string& chunk_id) const {
    auto it = by_id_.find(chunk_id);
    return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

const Chunk& ChunkStore::at(const std::string& chunk_id) const {
    const Chunk* c = find(chunk_id);
    if (!c) throw std::invalid_argument("unknown chunk id: " + chunk_id);
    return *c;
}

// --- JSONL formats -----------------------------------------------------------

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path) {
    std::vector<Document> docs;
    jsonl::for_each(path, [&](const nlohmann::json& rec, size_t lineno) {
        Document d;
        try {
            d.id = rec.at("id").get<std::string>();
            d.title = rec.value("title", "");
            d.body = rec.at("body").get<std::string>();
            if (rec.contains("metadata")) {
                const auto& m = rec["metadata"];
                d.metadata.engagement_count = m.value("engagement_count", 0L);
                d.metadata.poi_count = m.value("poi_count", 0L);
                d.metadata.quality_ok = m.value("quality_ok", true);
            }
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": bad document record: " + e.what());
        }
        d.metadata.length_chars = utf8::length(d.body);
        for (const auto& h : parse_sections(d.body).headings) d.title_path.push_back(h);
        docs.push_back(std::move(d));
    });
    return docs;
}

void dump_corpus_jsonl(const std::vector<Document>& docs, const std::filesystem::path& path) {
    jsonl::Writer out(path);
    for (const auto& d : docs) {
        nlohmann::json rec{
            {"id", d.id},
            {"title", d.title},
            {"body", d.body},
            {"metadata",
             {{"length_chars", d.metadata.length_chars},
              {"engagement_count", d.metadata.engagement_count},
              {"poi_count", d.metadata.poi_count},
              {"quality_ok", d.metadata.quality_ok}}},
        };
        out.write(rec);
    }
}

std::vector<Query> load_queries_jsonl(const std::filesystem::path& path) {
    std::vector<Query> queries;
    jsonl::for_each(path, [&](const nlohmann::json& rec, size_t lineno) {
        Query q;
        try {
            q.id = rec.at("id").get<std::string>();
            q.text = rec.at("text").get<std::string>();
            if (rec.contains("facts")) q.facts = rec["facts"].get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": bad query record: " + e.what());
        }
        queries.push_back(std::move(q));
    });
    return queries;
}

void dump_queries_jsonl(const std::vector<Query>& queries, const std::filesystem::path& path) {
    jsonl::Writer out(path);
    for (const auto& q : queries) {
        nlohmann::json rec{{"id", q.id}, {"text", q.text}};
        if (!q.facts.empty()) rec["facts"] = q.facts;
        out.write(rec);
    }
}

void dump_chunks_jsonl(const std::vector<Chunk>& chunks, const std::filesystem::path& path) {
    jsonl::Writer out(path);
    for (const auto& c : chunks) {
        out.write(nlohmann::json{{"id", c.id},
                                 {"doc_id", c.doc_id},
                                 {"start", c.span.start},
                                 {"end", c.span.end},
                                 {"strategy_id", c.strategy_id}});
    }
}

}  // namespace pooleval
