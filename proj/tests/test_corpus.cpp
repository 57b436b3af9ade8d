#include <doctest.h>

#include <random>

#include "pooleval/corpus.hpp"
#include "pooleval/text.hpp"
#include "pooleval/utf8.hpp"

using namespace pooleval;

namespace {

Document make_doc(const std::string& id, const std::string& body) {
    Document d;
    d.id = id;
    d.body = body;
    d.metadata.length_chars = utf8::length(body);
    return d;
}

SegmentationSpec spec_of(SegStrategy s, size_t min_merge = 100, size_t max_chunk = 500) {
    SegmentationSpec spec;
    spec.strategy = s;
    spec.min_merge_len = min_merge;
    spec.max_chunk_len = max_chunk;
    return spec;
}

// Independent reference for the split rule: scan for the last position
// <= limit that follows a sentence terminator, then whitespace, then the
// hard limit.
size_t reference_split_point(const std::string& ascii_text, size_t limit) {
    size_t best_term = 0, best_space = 0;
    for (size_t s = 1; s <= limit && s <= ascii_text.size(); ++s) {
        const char prev = ascii_text[s - 1];
        if (prev == '.' || prev == '!' || prev == '?') best_term = s;
        if (prev == ' ' || prev == '\n' || prev == '\t') best_space = s;
    }
    if (best_term) return best_term;
    if (best_space) return best_space;
    return limit;
}

std::string repeat_sentences(size_t sentence_len, size_t n) {
    std::string out;
    for (size_t i = 0; i < n; ++i) {
        std::string s(sentence_len - 1, 'x');
        s += '.';
        out += s;
    }
    return out;
}

}  // namespace

TEST_CASE("doc with two h1 sections under nmns yields one chunk per section") {
    const Document doc = make_doc("d1", "# One\nfirst section text\n# Two\nsecond section text");
    const auto chunks = segment_document(doc, spec_of(SegStrategy::nmns));
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].text == "first section text");
    CHECK(chunks[1].text == "second section text");
    CHECK(chunks[0].heading_level == 1);
    CHECK(chunks[1].heading_level == 1);
    CHECK(chunks[0].id == "d1:nmns:00000");
    CHECK(chunks[1].id == "d1:nmns:00001");
    validate_chunking(doc, chunks);
}

TEST_CASE("document without headings is one section") {
    const Document doc = make_doc("d1", "plain text without any heading structure");
    const auto chunks = segment_document(doc, spec_of(SegStrategy::nmns));
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].text == doc.body);
    CHECK(chunks[0].heading_level == 0);
}

TEST_CASE("empty body is an error") {
    const Document doc = make_doc("d1", "");
    CHECK_THROWS_AS(segment_document(doc, spec_of(SegStrategy::nmns)), std::invalid_argument);
}

TEST_CASE("original merges adjacent small same-level sections") {
    // Two same-level sections of 30 and 40 chars -> one merged chunk of
    // length 70 plus the in-document separator.
    const std::string sec1(30, 'a');
    const std::string sec2(40, 'b');
    const Document doc = make_doc("d1", "## A\n" + sec1 + "\n## B\n" + sec2);
    const auto nmns = segment_document(doc, spec_of(SegStrategy::nmns));
    REQUIRE(nmns.size() == 2);

    const auto merged = segment_document(doc, spec_of(SegStrategy::original, 100, 500));
    REQUIRE(merged.size() == 1);
    const size_t separator = nmns[1].span.start - nmns[0].span.end;
    CHECK(utf8::length(merged[0].text) == 70 + separator);
    CHECK(merged[0].span.start == nmns[0].span.start);
    CHECK(merged[0].span.end == nmns[1].span.end);
    validate_chunking(doc, merged);
}

TEST_CASE("merge_small_chunks examples") {
    const std::string sec1(30, 'a');
    const std::string sec2(40, 'b');

    SUBCASE("same level merges") {
        const Document doc = make_doc("d1", "## A\n" + sec1 + "\n## B\n" + sec2);
        auto chunks = segment_document(doc, spec_of(SegStrategy::nmns));
        const auto merged = merge_small_chunks(doc, chunks, 100);
        CHECK(merged.size() == 1);
    }
    SUBCASE("different levels do not merge") {
        const Document doc = make_doc("d1", "# A\n" + sec1 + "\n## B\n" + sec2);
        auto chunks = segment_document(doc, spec_of(SegStrategy::nmns));
        REQUIRE(chunks.size() == 2);
        CHECK(chunks[0].heading_level == 1);
        CHECK(chunks[1].heading_level == 2);
        const auto merged = merge_small_chunks(doc, chunks, 100);
        CHECK(merged.size() == 2);
    }
    SUBCASE("large chunks stay unmerged") {
        const Document doc =
            make_doc("d1", "## A\n" + std::string(200, 'a') + "\n## B\n" + std::string(300, 'b'));
        auto chunks = segment_document(doc, spec_of(SegStrategy::nmns));
        const auto merged = merge_small_chunks(doc, chunks, 100);
        CHECK(merged.size() == 2);
    }
    SUBCASE("idempotent on already-merged input") {
        const Document doc = make_doc("d1", "## A\n" + sec1 + "\n## B\n" + sec2);
        auto once = merge_small_chunks(doc, segment_document(doc, spec_of(SegStrategy::nmns)), 100);
        auto twice = merge_small_chunks(doc, once, 100);
        REQUIRE(once.size() == twice.size());
        CHECK(once[0].text == twice[0].text);
    }
}

TEST_CASE("split_long_chunk identity below the limit") {
    Chunk c;
    c.id = "d1:nms-x500:00000";
    c.doc_id = "d1";
    c.text = std::string(400, 'x');
    c.span = {0, 400};
    c.strategy_id = "nms-x500";
    const auto pieces = split_long_chunk(c, 500);
    REQUIRE(pieces.size() == 1);
    CHECK(pieces[0].id == c.id);
    CHECK(pieces[0].text == c.text);
}

TEST_CASE("split_long_chunk three pieces concatenate to the original") {
    // One 1200-char section, nms with max 500 -> 3 chunks, each <= 500.
    const std::string body = repeat_sentences(60, 20);  // 1200 chars
    REQUIRE(body.size() == 1200);
    const Document doc = make_doc("d1", "# T\n" + body);
    const auto chunks = segment_document(doc, spec_of(SegStrategy::nms, 100, 500));
    REQUIRE(chunks.size() == 3);
    std::string cat;
    for (const auto& c : chunks) {
        CHECK(utf8::length(c.text) <= 500);
        cat += c.text;
    }
    CHECK(cat == body);
    validate_chunking(doc, chunks);
}

TEST_CASE("split point picks the last sentence boundary before the limit") {
    // 501-char chunk with its only sentence boundary at 480 -> 480 + 21.
    std::string body = std::string(479, 'a') + "." + std::string(21, 'b');
    REQUIRE(body.size() == 501);
    Chunk c;
    c.id = "x";
    c.doc_id = "d";
    c.text = body;
    c.span = {0, 501};
    const auto pieces = split_long_chunk(c, 500);
    REQUIRE(pieces.size() == 2);

    const size_t expected = reference_split_point(body, 500);
    CHECK(expected == 480);
    CHECK(utf8::length(pieces[0].text) == expected);
    CHECK(utf8::length(pieces[1].text) == 21);
    CHECK(pieces[0].text + pieces[1].text == body);

    SUBCASE("whitespace fallback when no terminator exists") {
        std::string ws = std::string(200, 'a') + " " + std::string(400, 'b');
        Chunk w;
        w.id = "y";
        w.doc_id = "d";
        w.text = ws;
        w.span = {0, utf8::length(ws)};
        const auto parts = split_long_chunk(w, 500);
        CHECK(utf8::length(parts[0].text) == reference_split_point(ws, 500));
        CHECK(utf8::length(parts[0].text) == 201);
    }
    SUBCASE("hard cut as the last resort") {
        std::string hard(601, 'z');
        Chunk h;
        h.id = "z";
        h.doc_id = "d";
        h.text = hard;
        h.span = {0, 601};
        const auto parts = split_long_chunk(h, 500);
        REQUIRE(parts.size() == 2);
        CHECK(utf8::length(parts[0].text) == 500);
        CHECK(utf8::length(parts[1].text) == 101);
    }
}

TEST_CASE("split respects multi-byte sentence terminators") {
    std::string body;
    for (int i = 0; i < 40; ++i) {
        body += "这是一句话的内容补充文字。";  // 13 code points
    }
    const Document doc = make_doc("d1", "# T\n" + body);
    const auto chunks = segment_document(doc, spec_of(SegStrategy::nms, 50, 100));
    std::string cat;
    for (const auto& c : chunks) {
        CHECK(utf8::length(c.text) <= 100);
        // Every piece ends on the fullwidth period.
        CHECK(c.text.size() >= 3);
        CHECK(c.text.substr(c.text.size() - 3) == "。");
        cat += c.text;
    }
    CHECK(cat == body);
    validate_chunking(doc, chunks);
}

TEST_CASE("original applies merge then split") {
    // Two small same-level sections merge to 70+sep, then a long section is
    // split; nms leaves the small ones alone.
    const std::string small1(30, 'a'), small2(40, 'b');
    const std::string big = repeat_sentences(60, 20);
    const Document doc =
        make_doc("d1", "## A\n" + small1 + "\n## B\n" + small2 + "\n### C\n" + big);

    const auto original = segment_document(doc, spec_of(SegStrategy::original, 100, 500));
    const auto nms = segment_document(doc, spec_of(SegStrategy::nms, 100, 500));
    const auto nmns = segment_document(doc, spec_of(SegStrategy::nmns, 100, 500));

    CHECK(nmns.size() == 3);
    CHECK(nms.size() == 2 + 3);
    CHECK(original.size() == 1 + 3);
    validate_chunking(doc, original);
    validate_chunking(doc, nms);
    validate_chunking(doc, nmns);
}

TEST_CASE("segmentation is deterministic") {
    const Document doc = make_doc("d1", "# A\n" + repeat_sentences(50, 30) + "\n## B\nshort tail");
    const auto a = segment_document(doc, spec_of(SegStrategy::original));
    const auto b = segment_document(doc, spec_of(SegStrategy::original));
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].text == b[i].text);
        CHECK(a[i].span.start == b[i].span.start);
    }
}

TEST_CASE("partition and monotone-count properties over generated documents") {
    std::mt19937_64 rng(404);
    const char* fillers[] = {"alpha", "bravo", "delta", "echo", "fox", "golf"};
    for (int trial = 0; trial < 25; ++trial) {
        std::string body;
        const int sections = 1 + static_cast<int>(rng() % 6);
        for (int s = 0; s < sections; ++s) {
            const int level = 1 + static_cast<int>(rng() % 3);
            body += std::string(static_cast<size_t>(level), '#') + " H" + std::to_string(s) + "\n";
            const int sentences = static_cast<int>(rng() % 14);
            for (int t = 0; t < sentences; ++t) {
                body += std::string("word ") + fillers[rng() % 6] + " " + fillers[rng() % 6] +
                        " item " + std::to_string(t) + ". ";
            }
            body += "\n";
        }
        if (body.empty()) continue;
        const Document doc = make_doc("gen" + std::to_string(trial), body);

        size_t counts[3] = {0, 0, 0};
        const SegStrategy strategies[] = {SegStrategy::original, SegStrategy::nms,
                                          SegStrategy::nmns};
        for (int si = 0; si < 3; ++si) {
            const auto chunks = segment_document(doc, spec_of(strategies[si], 40, 120));
            validate_chunking(doc, chunks);
            counts[si] = chunks.size();
            for (const auto& c : chunks) {
                CHECK_FALSE(c.text.empty());
                if (strategies[si] != SegStrategy::nmns) {
                    CHECK(utf8::length(c.text) <= 120);
                }
            }
        }
        CHECK(counts[2] <= counts[1]);  // nmns <= nms
        CHECK(counts[0] <= counts[1]);  // original <= nms
    }
}

TEST_CASE("poi percentiles threshold") {
    std::vector<Document> docs;
    for (long p = 1; p <= 20; ++p) {
        Document d = make_doc("d" + std::to_string(p), "x");
        d.metadata.poi_count = p;
        docs.push_back(d);
    }
    const auto poi = PoiPercentiles::from_documents(docs);
    CHECK(poi.threshold(0.25) == 5);  // rank ceil(0.25*20) = 5 -> value 5
    CHECK(poi.threshold(0.5) == 10);
    CHECK_THROWS_AS(poi.threshold(0.0), std::invalid_argument);
    CHECK_THROWS_AS(poi.threshold(1.0), std::invalid_argument);
}

TEST_CASE("segmentation spec ids embed only the parameters in play") {
    CHECK(spec_of(SegStrategy::nmns).id() == "nmns");
    CHECK(spec_of(SegStrategy::nms, 100, 500).id() == "nms-x500");
    CHECK(spec_of(SegStrategy::original, 100, 500).id() == "original-m100-x500");
    CHECK_THROWS_AS(spec_of(SegStrategy::nms, 500, 500).validate(), std::invalid_argument);
}

TEST_CASE("corpus jsonl round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "pooleval-corpus-test";
    std::filesystem::create_directories(dir);
    std::vector<Document> docs;
    Document d = make_doc("doc-1", "# Title\nsome body text here");
    d.title = "Title";
    d.metadata.engagement_count = 12;
    d.metadata.poi_count = 3;
    d.metadata.quality_ok = false;
    docs.push_back(d);
    dump_corpus_jsonl(docs, dir / "corpus.jsonl");
    const auto loaded = load_corpus_jsonl(dir / "corpus.jsonl");
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].id == "doc-1");
    CHECK(loaded[0].body == d.body);
    CHECK(loaded[0].metadata.engagement_count == 12);
    CHECK(loaded[0].metadata.quality_ok == false);
    CHECK(loaded[0].metadata.length_chars == utf8::length(d.body));
    REQUIRE(loaded[0].title_path.size() == 1);
    CHECK(loaded[0].title_path[0].level == 1);
    CHECK(loaded[0].title_path[0].text == "Title");
    std::filesystem::remove_all(dir);
}
