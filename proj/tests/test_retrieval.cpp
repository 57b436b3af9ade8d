#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "pooleval/retrieval.hpp"
#include "pooleval/text.hpp"

using namespace pooleval;

namespace {

Chunk make_chunk(const std::string& id, const std::string& text, const std::string& doc_id = "d") {
    Chunk c;
    c.id = id;
    c.doc_id = doc_id;
    c.text = text;
    c.span = {0, utf8::length(text)};
    c.strategy_id = "nmns";
    return c;
}

RankedList ranked(const std::string& qid, std::vector<std::string> ids) {
    RankedList list;
    list.query_id = qid;
    for (size_t i = 0; i < ids.size(); ++i) {
        list.entries.push_back({ids[i], 1.0 / static_cast<double>(i + 1), static_cast<int>(i) + 1});
    }
    return list;
}

}  // namespace

TEST_CASE("hashed embedder is deterministic and unit-normalized") {
    HashedBowEmbedder emb("hash-64", 64);
    const auto a = emb.embed("the quick brown fox");
    const auto b = emb.embed("the quick brown fox");
    CHECK(a.values == b.values);
    CHECK(cosine(a, b) == doctest::Approx(1.0).epsilon(1e-9));
    double norm = 0;
    for (double v : a.values) norm += v * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(emb.embed(""), std::invalid_argument);
}

TEST_CASE("disjoint hash buckets give cosine zero") {
    // Enumerate bucket assignments first: pick a second token pair whose
    // buckets are disjoint from the first pair's.
    HashedBowEmbedder emb("hash-64", 64);
    const std::vector<std::string> first = {"alpha", "beta"};
    std::set<size_t> first_buckets;
    for (const auto& t : first) first_buckets.insert(HashedBowEmbedder::bucket_of(t, 64, "hash-64"));

    const std::vector<std::vector<std::string>> candidates = {
        {"gamma", "delta"}, {"epsilon", "zeta"}, {"theta", "kappa"}, {"sigma", "omega"},
        {"lambda", "micron"}};
    const std::vector<std::string>* chosen = nullptr;
    for (const auto& cand : candidates) {
        bool disjoint = true;
        for (const auto& t : cand) {
            if (first_buckets.count(HashedBowEmbedder::bucket_of(t, 64, "hash-64"))) {
                disjoint = false;
            }
        }
        if (disjoint) {
            chosen = &cand;
            break;
        }
    }
    REQUIRE(chosen != nullptr);
    const auto va = emb.embed(first[0] + " " + first[1]);
    const auto vb = emb.embed((*chosen)[0] + " " + (*chosen)[1]);
    CHECK(std::abs(cosine(va, vb)) <= 1e-9);
}

TEST_CASE("different embedder ids hash differently") {
    HashedBowEmbedder a("hash-64", 64), b("other-64", 64);
    CHECK(a.embed("shared text").values != b.embed("shared text").values);
}

TEST_CASE("dense search examples") {
    SUBCASE("hand-built 2d vectors") {
        // cosine with query (1,0): chunk1 -> 1.0, chunk2 -> 0.6, chunk3 -> 0.
        DenseIndex index({"c1", "c2", "c3"},
                         {{{1.0, 0.0}}, {{0.6, 0.8}}, {{0.0, 1.0}}});
        const auto hits = index.search({{1.0, 0.0}}, 2, "q");
        REQUIRE(hits.entries.size() == 2);
        CHECK(hits.entries[0].chunk_id == "c1");
        CHECK(hits.entries[0].score == doctest::Approx(1.0));
        CHECK(hits.entries[1].chunk_id == "c2");
        CHECK(hits.entries[1].score == doctest::Approx(0.6));
        validate_ranked_list(hits, true);
    }
    SUBCASE("query identical to a chunk ranks it first") {
        HashedBowEmbedder emb("hash-64", 64);
        std::vector<std::string> ids;
        std::vector<EmbeddingVector> vecs;
        const std::vector<std::string> texts = {"alpine lake hiking guide",
                                                "urban coffee shop reviews",
                                                "desert stargazing spots"};
        for (size_t i = 0; i < texts.size(); ++i) {
            ids.push_back("c" + std::to_string(i));
            vecs.push_back(emb.embed(texts[i]));
        }
        DenseIndex index(std::move(ids), std::move(vecs));
        const auto hits = index.search(emb.embed(texts[1]), 1, "q");
        CHECK(hits.entries[0].chunk_id == "c1");
        CHECK(hits.entries[0].score == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("k at least corpus size returns everything ranked") {
        DenseIndex index({"a", "b"}, {{{1.0, 0.0}}, {{0.0, 1.0}}});
        const auto hits = index.search({{0.7, 0.3}}, 10, "q");
        CHECK(hits.entries.size() == 2);
    }
    SUBCASE("k <= 0 is an argument error") {
        DenseIndex index({"a"}, {{{1.0}}});
        CHECK_THROWS_AS(index.search({{1.0}}, 0, "q"), std::invalid_argument);
    }
}

TEST_CASE("bm25 matches the hand-evaluated formula") {
    // Chunk A: 10 tokens, tf(kiwi)=2. Chunk B: 20 tokens, tf(kiwi)=1.
    std::string a_text = "kiwi kiwi";
    for (int i = 0; i < 8; ++i) a_text += " apple" + std::to_string(i);
    std::string b_text = "kiwi";
    for (int i = 0; i < 19; ++i) b_text += " pear" + std::to_string(i);

    SparseIndex index({make_chunk("cA", a_text), make_chunk("cB", b_text)});
    const auto hits = index.search("kiwi", 2, "q");
    REQUIRE(hits.entries.size() == 2);

    // Independent evaluation of BM25 with k1=1.2, b=0.75,
    // idf = ln(1 + (N - df + 0.5)/(df + 0.5)): N=2, df=2, avgdl=15.
    const double idf = std::log(1.0 + (2.0 - 2.0 + 0.5) / (2.0 + 0.5));
    const double score_a = idf * (2.0 * 2.2) / (2.0 + 1.2 * (0.25 + 0.75 * 10.0 / 15.0));
    const double score_b = idf * (1.0 * 2.2) / (1.0 + 1.2 * (0.25 + 0.75 * 20.0 / 15.0));
    CHECK(hits.entries[0].chunk_id == "cA");
    CHECK(hits.entries[0].score == doctest::Approx(score_a).epsilon(1e-9));
    CHECK(hits.entries[1].chunk_id == "cB");
    CHECK(hits.entries[1].score == doctest::Approx(score_b).epsilon(1e-9));
}

TEST_CASE("bm25 basics") {
    SparseIndex index({make_chunk("c1", "unique marker resides here"),
                       make_chunk("c2", "nothing to see in this chunk"),
                       make_chunk("c3", "another plain chunk of words")});
    SUBCASE("term in exactly one chunk ranks it first") {
        const auto hits = index.search("marker", 3, "q");
        REQUIRE(hits.entries.size() == 1);
        CHECK(hits.entries[0].chunk_id == "c1");
        CHECK(hits.entries[0].rank == 1);
    }
    SUBCASE("query with no indexed terms is empty") {
        CHECK(index.search("zzzzz qqqqq", 5, "q").entries.empty());
    }
    SUBCASE("zero-match chunks are excluded") {
        const auto hits = index.search("chunk", 3, "q");
        CHECK(hits.entries.size() == 2);
        for (const auto& e : hits.entries) CHECK(e.chunk_id != "c1");
    }
}

TEST_CASE("reciprocal rank fusion") {
    SUBCASE("rank 1 in both lists scores 2/61") {
        const auto dense = ranked("q", {"x", "y", "z"});
        const auto sparse = ranked("q", {"x", "z", "w"});
        const auto fused = hybrid_fuse(dense, sparse, 4);
        CHECK(fused.entries[0].chunk_id == "x");
        CHECK(fused.entries[0].score == doctest::Approx(2.0 / 61.0).epsilon(1e-12));
        // 2/61 = 0.032786885...
        CHECK(fused.entries[0].score == doctest::Approx(0.0327868852459016).epsilon(1e-12));
        validate_ranked_list(fused, true);
    }
    SUBCASE("chunk present only in dense at rank 1 still wins when others are worse") {
        const auto dense = ranked("q", {"only"});
        const auto sparse = ranked("q", {});
        const auto fused = hybrid_fuse(dense, sparse, 5);
        REQUIRE(fused.entries.size() == 1);
        CHECK(fused.entries[0].chunk_id == "only");
    }
    SUBCASE("empty sparse list preserves dense order") {
        const auto dense = ranked("q", {"a", "b", "c", "d"});
        RankedList sparse;
        sparse.query_id = "q";
        const auto fused = hybrid_fuse(dense, sparse, 3);
        REQUIRE(fused.entries.size() == 3);
        CHECK(fused.entries[0].chunk_id == "a");
        CHECK(fused.entries[1].chunk_id == "b");
        CHECK(fused.entries[2].chunk_id == "c");
    }
    SUBCASE("mismatched query ids are an argument error") {
        CHECK_THROWS_AS(hybrid_fuse(ranked("q1", {"a"}), ranked("q2", {"a"}), 1),
                        std::invalid_argument);
    }
    SUBCASE("fusion dominance: rank 1 in both implies fused rank 1") {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::string> ids{"top"};
            for (int i = 0; i < 8; ++i) ids.push_back("c" + std::to_string(i));
            auto d_ids = ids, s_ids = ids;
            std::shuffle(d_ids.begin() + 1, d_ids.end(), rng);
            std::shuffle(s_ids.begin() + 1, s_ids.end(), rng);
            const auto fused = hybrid_fuse(ranked("q", d_ids), ranked("q", s_ids), 9);
            CHECK(fused.entries[0].chunk_id == "top");
        }
    }
}

namespace {

struct FixedRewriter : QueryRewriter {
    std::vector<std::string> rewrites;
    std::string id() const override { return "fixed"; }
    std::vector<std::string> rewrite(const std::string&) override { return rewrites; }
};

}  // namespace

TEST_CASE("rewrite_query returns exactly four rewrites") {
    SUBCASE("template rewriter expands with the original content") {
        TemplateRewriter rw;
        size_t padded = 9;
        const auto out = rewrite_query(rw, "hotel refund policy", &padded);
        REQUIRE(out.size() == 4);
        CHECK(padded == 0);
        std::set<std::string> distinct(out.begin(), out.end());
        CHECK(distinct.size() == 4);
        for (const auto& r : out) {
            CHECK(r != "hotel refund policy");
            CHECK(r.find("hotel refund policy") != std::string::npos);
        }
    }
    SUBCASE("short adapter output is padded with the original") {
        FixedRewriter rw;
        rw.rewrites = {"one rewrite", "two rewrite"};
        size_t padded = 0;
        const auto out = rewrite_query(rw, "orig", &padded);
        REQUIRE(out.size() == 4);
        CHECK(padded == 2);
        CHECK(out[0] == "one rewrite");
        CHECK(out[1] == "two rewrite");
        CHECK(out[2] == "orig");
        CHECK(out[3] == "orig");
    }
    SUBCASE("duplicates and copies of the original are discarded") {
        FixedRewriter rw;
        rw.rewrites = {"orig", "a", "a", "", "b", "c", "d", "e"};
        size_t padded = 0;
        const auto out = rewrite_query(rw, "orig", &padded);
        CHECK(out == std::vector<std::string>{"a", "b", "c", "d"});
        CHECK(padded == 0);
    }
}

namespace {

struct FilterFixture {
    DocumentStore docs;
    ChunkStore chunks;
    PoiPercentiles poi;
    RankedList candidates;

    FilterFixture() {
        candidates.query_id = "q";
        std::vector<Document> all;
        for (int i = 0; i < 20; ++i) {
            Document d;
            d.id = "doc" + std::string(i < 10 ? "0" : "") + std::to_string(i);
            // Docs 5..9 shorter than 50 chars; the rest comfortably longer.
            d.body = i >= 5 && i < 10 ? "short body " + std::to_string(i)
                                      : "this body is intentionally long enough to clear the "
                                        "fifty character length threshold " +
                                            std::to_string(i);
            d.metadata.length_chars = utf8::length(d.body);
            d.metadata.quality_ok = !(i < 5);            // 0..4 low quality
            d.metadata.engagement_count = (i >= 10 && i < 15) ? 10 : 40;  // 10..14 low engagement
            d.metadata.poi_count = i + 1;                 // 1..20 distinct; bottom 25% = 1..5
            all.push_back(d);
        }
        poi = PoiPercentiles::from_documents(all);
        std::vector<std::pair<std::string, double>> scored;
        for (int i = 0; i < 20; ++i) {
            Chunk c = make_chunk("k" + std::string(i < 10 ? "0" : "") + std::to_string(i),
                                 all[static_cast<size_t>(i)].body,
                                 all[static_cast<size_t>(i)].id);
            chunks.add({c});
            scored.emplace_back(c.id, 1.0 - i * 0.01);
            docs.add(all[static_cast<size_t>(i)]);
        }
        candidates = make_ranked("q", "r", scored);
    }

    std::set<std::string> surviving(const FilterSpec& spec) const {
        const auto out = apply_filters(candidates, spec, docs, chunks, poi);
        std::set<std::string> ids;
        for (const auto& e : out.entries) ids.insert(e.chunk_id);
        return ids;
    }
};

}  // namespace

TEST_CASE("filters remove exactly the documents failing their predicate") {
    FilterFixture fx;

    SUBCASE("all filters off is the identity") {
        FilterSpec spec;
        const auto out = apply_filters(fx.candidates, spec, fx.docs, fx.chunks, fx.poi);
        REQUIRE(out.entries.size() == fx.candidates.entries.size());
        for (size_t i = 0; i < out.entries.size(); ++i) {
            CHECK(out.entries[i].chunk_id == fx.candidates.entries[i].chunk_id);
        }
    }
    SUBCASE("quality filter removes quality_ok=false docs") {
        FilterSpec spec;
        spec.quality = true;
        const auto alive = fx.surviving(spec);
        CHECK(alive.size() == 15);
        for (int i = 0; i < 5; ++i) CHECK_FALSE(alive.count("k0" + std::to_string(i)));
    }
    SUBCASE("length filter removes docs with length_chars < 50") {
        FilterSpec spec;
        spec.length = true;
        const auto alive = fx.surviving(spec);
        CHECK(alive.size() == 15);
        for (int i = 5; i < 10; ++i) CHECK_FALSE(alive.count("k0" + std::to_string(i)));
    }
    SUBCASE("engagement filter removes docs with interactions < 25") {
        FilterSpec spec;
        spec.engagement = true;
        const auto alive = fx.surviving(spec);
        CHECK(alive.size() == 15);
        for (int i = 10; i < 15; ++i) CHECK_FALSE(alive.count("k" + std::to_string(i)));
    }
    SUBCASE("poi filter removes the bottom 25 percent") {
        FilterSpec spec;
        spec.poi = true;
        const auto alive = fx.surviving(spec);
        CHECK(alive.size() == 15);
        for (int i = 0; i < 5; ++i) CHECK_FALSE(alive.count("k0" + std::to_string(i)));
    }
    SUBCASE("filters only remove and preserve relative order") {
        FilterSpec spec;
        spec.quality = true;
        spec.length = true;
        spec.engagement = true;
        spec.poi = true;
        const auto out = apply_filters(fx.candidates, spec, fx.docs, fx.chunks, fx.poi);
        validate_ranked_list(out, true);
        std::set<std::string> input_ids;
        for (const auto& e : fx.candidates.entries) input_ids.insert(e.chunk_id);
        int last_rank = 0;
        for (const auto& e : out.entries) {
            CHECK(input_ids.count(e.chunk_id) == 1);
            CHECK(e.rank == last_rank + 1);
            last_rank = e.rank;
        }
    }
}

namespace {

struct RerankFixture {
    ChunkStore chunks;
    RankedList list;
    std::map<std::string, double> keys;  // planted true relevance

    explicit RerankFixture(size_t n, uint64_t seed = 11) {
        list.query_id = "q";
        std::vector<std::string> ids;
        for (size_t i = 0; i < n; ++i) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "c%03zu", i);
            ids.emplace_back(buf);
            chunks.add({make_chunk(buf, "chunk text " + std::string(buf))});
            keys[buf] = static_cast<double>(i);  // c000 worst ... c(n-1) best
        }
        std::mt19937_64 rng(seed);
        std::shuffle(ids.begin(), ids.end(), rng);
        std::vector<std::pair<std::string, double>> scored;
        for (size_t i = 0; i < ids.size(); ++i) {
            scored.emplace_back(ids[i], 1.0 - static_cast<double>(i) * 0.001);
        }
        list = make_ranked("q", "r", scored);
    }
};

// Counting listwise adapter used to observe call windows.
struct RecordingListwise : ListwiseReranker {
    KeyedListwise inner;
    std::vector<std::vector<std::string>> seen;
    explicit RecordingListwise(std::map<std::string, double> keys) : inner(std::move(keys)) {}
    std::string id() const override { return "recording"; }
    std::vector<std::string> order(const std::string& q,
                                   const std::vector<const Chunk*>& window) override {
        std::vector<std::string> ids;
        for (const Chunk* c : window) ids.push_back(c->id);
        seen.push_back(ids);
        return inner.order(q, window);
    }
};

// Independent simulation of the tail-to-head window pass, used as the oracle
// for the sliding-window implementation.
std::vector<std::string> simulate_window_pass(std::vector<std::string> ids,
                                              const std::map<std::string, double>& keys,
                                              size_t window, size_t overlap) {
    const size_t n = ids.size();
    const size_t w = std::min(window, n);
    const size_t step = window - overlap;
    size_t start = n > w ? n - w : 0;
    while (true) {
        std::stable_sort(ids.begin() + static_cast<std::ptrdiff_t>(start),
                         ids.begin() + static_cast<std::ptrdiff_t>(start + w),
                         [&](const std::string& a, const std::string& b) {
                             return keys.at(a) > keys.at(b);
                         });
        if (start == 0) break;
        start = start >= step ? start - step : 0;
    }
    return ids;
}

}  // namespace

TEST_CASE("rerank none is the identity") {
    RerankFixture fx(10);
    RerankerSpec spec;
    const auto out = rerank("q", fx.list, spec, nullptr, nullptr, fx.chunks);
    REQUIRE(out.entries.size() == fx.list.entries.size());
    for (size_t i = 0; i < out.entries.size(); ++i) {
        CHECK(out.entries[i].chunk_id == fx.list.entries[i].chunk_id);
        CHECK(out.entries[i].score == fx.list.entries[i].score);
    }
}

TEST_CASE("sliding window over 50 entries makes exactly 4 calls") {
    RerankFixture fx(50);
    RecordingListwise adapter(fx.keys);
    RerankerSpec spec;
    spec.kind = RerankKind::sliding_window;
    spec.window = 20;
    spec.overlap = 10;
    RerankStats stats;
    const auto out = rerank("q", fx.list, spec, nullptr, &adapter, fx.chunks, &stats);

    CHECK(stats.listwise_calls == 4);
    REQUIRE(stats.windows.size() == 4);
    CHECK(stats.windows[0] == std::pair<int, int>{31, 50});
    CHECK(stats.windows[1] == std::pair<int, int>{21, 40});
    CHECK(stats.windows[2] == std::pair<int, int>{11, 30});
    CHECK(stats.windows[3] == std::pair<int, int>{1, 20});

    // The planted best item is carried through every overlap to rank 1.
    CHECK(out.entries[0].chunk_id == "c049");
    validate_ranked_list(out, false);

    // Full ordering agrees with the independent window-pass simulation.
    std::vector<std::string> input_ids;
    for (const auto& e : fx.list.entries) input_ids.push_back(e.chunk_id);
    const auto expected = simulate_window_pass(input_ids, fx.keys, 20, 10);
    REQUIRE(out.entries.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
        CHECK(out.entries[i].chunk_id == expected[i]);
    }
}

TEST_CASE("sliding window call count formula") {
    auto calls_for = [](size_t n) {
        RerankFixture fx(n);
        RecordingListwise adapter(fx.keys);
        RerankerSpec spec;
        spec.kind = RerankKind::sliding_window;
        spec.window = 20;
        spec.overlap = 10;
        RerankStats stats;
        rerank("q", fx.list, spec, nullptr, &adapter, fx.chunks, &stats);
        return stats.listwise_calls;
    };
    // ceil((n - w)/(w - o)) + 1 for n > w, else 1
    CHECK(calls_for(50) == 4);
    CHECK(calls_for(20) == 1);
    CHECK(calls_for(12) == 1);
    CHECK(calls_for(21) == 2);
    CHECK(calls_for(55) == 5);
}

TEST_CASE("non-permutation listwise output is repaired") {
    struct BrokenListwise : ListwiseReranker {
        std::string id() const override { return "broken"; }
        std::vector<std::string> order(const std::string&,
                                       const std::vector<const Chunk*>& window) override {
            // Returns one valid id, one alien id, and drops the rest.
            return {window.back()->id, "not-in-window"};
        }
    };
    RerankFixture fx(6);
    BrokenListwise adapter;
    RerankerSpec spec;
    spec.kind = RerankKind::sliding_window;
    spec.window = 6;
    spec.overlap = 3;
    RerankStats stats;
    const auto out = rerank("q", fx.list, spec, nullptr, &adapter, fx.chunks, &stats);
    CHECK(stats.repairs == 1);
    REQUIRE(out.entries.size() == 6);
    // Returned valid id first, then the remaining five in prior order.
    CHECK(out.entries[0].chunk_id == fx.list.entries[5].chunk_id);
    for (size_t i = 1; i < 6; ++i) {
        CHECK(out.entries[i].chunk_id == fx.list.entries[i - 1].chunk_id);
    }
    validate_ranked_list(out, false);
}

TEST_CASE("pointwise rerank sorts by adapter score with prior-rank ties") {
    struct HalfScorer : PointwiseScorer {
        std::string id() const override { return "half"; }
        std::vector<double> score(const std::string&,
                                  const std::vector<const Chunk*>& chunks) override {
            std::vector<double> out;
            for (const Chunk* c : chunks) {
                out.push_back(c->id >= "c005" ? 1.0 : 0.5);  // two tie groups
            }
            return out;
        }
    };
    RerankFixture fx(10);
    HalfScorer scorer;
    RerankerSpec spec;
    spec.kind = RerankKind::pointwise;
    RerankStats stats;
    const auto out = rerank("q", fx.list, spec, &scorer, nullptr, fx.chunks, &stats);
    CHECK(stats.pointwise_calls == 1);
    REQUIRE(out.entries.size() == 10);
    // All 1.0-scored entries first, each tie group in prior order.
    std::vector<std::string> high_prior, low_prior;
    for (const auto& e : fx.list.entries) {
        (e.chunk_id >= "c005" ? high_prior : low_prior).push_back(e.chunk_id);
    }
    for (size_t i = 0; i < high_prior.size(); ++i) {
        CHECK(out.entries[i].chunk_id == high_prior[i]);
    }
    for (size_t i = 0; i < low_prior.size(); ++i) {
        CHECK(out.entries[high_prior.size() + i].chunk_id == low_prior[i]);
    }
    validate_ranked_list(out, false);
}

TEST_CASE("window spec validation") {
    RerankerSpec spec;
    spec.kind = RerankKind::sliding_window;
    spec.window = 20;
    spec.overlap = 20;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.overlap = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.overlap = 10;
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("ranked list validator catches violations") {
    RankedList bad;
    bad.query_id = "q";
    bad.entries = {{"a", 1.0, 1}, {"b", 2.0, 2}};
    CHECK_THROWS(validate_ranked_list(bad, true));  // score increases
    bad.entries = {{"a", 1.0, 1}, {"a", 0.5, 2}};
    CHECK_THROWS(validate_ranked_list(bad, true));  // duplicate
    bad.entries = {{"a", 1.0, 1}, {"b", 0.5, 3}};
    CHECK_THROWS(validate_ranked_list(bad, true));  // rank gap
    bad.entries = {{"b", 1.0, 1}, {"a", 1.0, 2}};
    CHECK_THROWS(validate_ranked_list(bad, true));   // id tie order
    CHECK_NOTHROW(validate_ranked_list(bad, false)); // relaxed after rerank
}

namespace {

RetrievalEngine make_engine() {
    std::vector<Document> docs;
    const std::vector<std::string> bodies = {
        "# A\nthe alpine lake hiking guide covers mountain trails. pack layers for the summit "
        "ridge.",
        "# B\nurban coffee shop reviews for the old town. espresso quality varies by roaster.",
        "# C\ndesert stargazing spots with clear night skies. bring a red lantern for maps.",
        "# D\ncoastal cycling routes along the harbor promenade. rent a bike near the pier.",
        "# E\nmuseum quarter walking tour with gallery passes. the sculpture garden closes "
        "early.",
    };
    for (size_t i = 0; i < bodies.size(); ++i) {
        Document d;
        d.id = "doc" + std::to_string(i);
        d.body = bodies[i];
        d.metadata.length_chars = utf8::length(d.body);
        d.metadata.engagement_count = 100;
        d.metadata.poi_count = static_cast<long>(i) + 10;
        docs.push_back(d);
    }
    return RetrievalEngine(docs);
}

RetrieverSpec basic_spec(const std::string& id) {
    RetrieverSpec spec;
    spec.id = id;
    spec.segmentation.strategy = SegStrategy::nmns;
    spec.mode = RetrievalMode::dense;
    spec.embedder_id = "hash-64";
    spec.k = 3;
    spec.pool_multiplier = 1;
    return spec;
}

}  // namespace

TEST_CASE("degenerate pipeline equals plain dense search") {
    RetrievalEngine engine = make_engine();
    engine.register_embedder(std::make_shared<HashedBowEmbedder>("hash-64", 64));
    RetrieverSpec spec = basic_spec("r1");
    spec.k = 5;
    engine.prepare(spec);

    Query q{"q1", "alpine lake hiking", {}};
    const auto piped = engine.run_retriever(spec, q);

    HashedBowEmbedder emb("hash-64", 64);
    std::vector<std::string> ids;
    std::vector<EmbeddingVector> vecs;
    for (const Chunk& c : engine.chunks("nmns").all()) {
        ids.push_back(c.id);
        vecs.push_back(emb.embed(c.text));
    }
    DenseIndex direct(std::move(ids), std::move(vecs));
    const auto expect = direct.search(emb.embed(q.text), 5, q.id);

    REQUIRE(piped.entries.size() == expect.entries.size());
    for (size_t i = 0; i < piped.entries.size(); ++i) {
        CHECK(piped.entries[i].chunk_id == expect.entries[i].chunk_id);
        CHECK(piped.entries[i].score == doctest::Approx(expect.entries[i].score));
    }
    CHECK(piped.retriever_id == "r1");
}

TEST_CASE("rewriter-on issues five depth-10 recall calls") {
    RetrievalEngine engine = make_engine();
    engine.register_embedder(std::make_shared<HashedBowEmbedder>("hash-64", 64));
    engine.set_rewriter(std::make_shared<TemplateRewriter>());
    RetrieverSpec spec = basic_spec("r1");
    spec.rewriter = true;
    engine.prepare(spec);

    PipelineStats stats;
    const auto out = engine.run_retriever(spec, Query{"q1", "harbor cycling", {}}, &stats);
    CHECK(stats.recall_calls == 5);
    REQUIRE(stats.recall_depths.size() == 5);
    for (int d : stats.recall_depths) CHECK(d == 10);
    validate_ranked_list(out, false);
    CHECK(out.entries.size() <= static_cast<size_t>(spec.k));
}

TEST_CASE("filter removing every candidate yields a valid empty list") {
    RetrievalEngine engine = make_engine();
    engine.register_embedder(std::make_shared<HashedBowEmbedder>("hash-64", 64));
    RetrieverSpec spec = basic_spec("r1");
    spec.filter.engagement = true;
    spec.filter.engagement_threshold = 1000;  // nothing passes
    engine.prepare(spec);
    const auto out = engine.run_retriever(spec, Query{"q1", "museum tour", {}});
    CHECK(out.entries.empty());
    CHECK(out.query_id == "q1");
    CHECK(out.retriever_id == "r1");
}

TEST_CASE("pipeline stage errors carry the stage label") {
    RetrievalEngine engine = make_engine();
    engine.register_embedder(std::make_shared<HashedBowEmbedder>("hash-64", 64));
    RetrieverSpec spec = basic_spec("r1");
    spec.rewriter = true;  // no rewriter registered
    engine.prepare(spec);
    try {
        engine.run_retriever(spec, Query{"q1", "anything", {}});
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("stage 'recall'") != std::string::npos);
        CHECK(std::string(e.what()).find("r1") != std::string::npos);
    }
}

TEST_CASE("hybrid pipeline matches fused components") {
    RetrievalEngine engine = make_engine();
    engine.register_embedder(std::make_shared<HashedBowEmbedder>("hash-64", 64));
    RetrieverSpec spec = basic_spec("r1");
    spec.mode = RetrievalMode::hybrid;
    spec.k = 4;
    engine.prepare(spec);
    const auto out = engine.run_retriever(spec, Query{"q1", "coffee espresso roaster", {}});
    validate_ranked_list(out, false);
    CHECK_FALSE(out.entries.empty());
    // BM25 and dense agree that the coffee doc chunk ranks first here.
    CHECK(out.entries[0].chunk_id.rfind("doc1:", 0) == 0);
}

TEST_CASE("pipeline determinism across parallel index builds") {
    auto build_and_run = [](size_t workers) {
        std::vector<Document> docs;
        for (int i = 0; i < 12; ++i) {
            Document d;
            d.id = "doc" + std::to_string(i);
            d.body = "# T\nsection about topic " + std::to_string(i % 4) +
                     " with shared words lake museum harbor.";
            d.metadata.length_chars = utf8::length(d.body);
            docs.push_back(d);
        }
        RetrievalEngine engine(docs, workers);
        engine.register_embedder(std::make_shared<HashedBowEmbedder>("hash-64", 64));
        RetrieverSpec spec;
        spec.id = "r";
        spec.segmentation.strategy = SegStrategy::nmns;
        spec.embedder_id = "hash-64";
        spec.k = 6;
        spec.pool_multiplier = 2;
        engine.prepare(spec);
        return engine.run_retriever(spec, Query{"q", "lake museum", {}});
    };
    const auto a = build_and_run(1);
    const auto b = build_and_run(8);
    REQUIRE(a.entries.size() == b.entries.size());
    for (size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].chunk_id == b.entries[i].chunk_id);
        CHECK(a.entries[i].score == b.entries[i].score);
    }
}
