#include <doctest.h>

#include "pooleval/judge.hpp"
#include "pooleval/text.hpp"
#include "pooleval/utf8.hpp"

using namespace pooleval;

namespace {

Chunk make_chunk(const std::string& id, const std::string& text) {
    Chunk c;
    c.id = id;
    c.doc_id = "d";
    c.text = text;
    c.span = {0, utf8::length(text)};
    c.strategy_id = "nmns";
    return c;
}

Query planted_query() {
    Query q;
    q.id = "q3";
    q.text = "what settles question q3";
    q.facts = {"Record FACT-q3-1 confirms the canonical answer.",
               "Record FACT-q3-2 confirms the canonical answer."};
    return q;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("fact token extraction finds the planted marker") {
    CHECK(OracleJudge::fact_token("Record FACT-q3-1 confirms it.") == "FACT-q3-1");
    CHECK(OracleJudge::fact_token("FACT-q0-0 leads the sentence") == "FACT-q0-0");
    // No marker: the whole sentence is the token.
    CHECK(OracleJudge::fact_token("check-out time is 11 am") == "check-out time is 11 am");
}

TEST_CASE("oracle judge is the planted-fact relevance function") {
    const Query q = planted_query();
    OracleJudge judge({q});

    SUBCASE("chunk containing a planted token is relevant") {
        const auto j = judge.judge(q, make_chunk("c1", "noise before. Record FACT-q3-1 confirms "
                                                       "the canonical answer. noise after."));
        REQUIRE(j.judged());
        CHECK(*j.relevant);
        CHECK(j.judge_id == "oracle-judge");
        CHECK(j.query_id == "q3");
        CHECK(j.chunk_id == "c1");
    }
    SUBCASE("pure distractor chunk is irrelevant") {
        const auto j = judge.judge(q, make_chunk("c2", "entirely unrelated distractor text"));
        REQUIRE(j.judged());
        CHECK_FALSE(*j.relevant);
    }
    SUBCASE("token matching is whitespace and case insensitive") {
        const auto j = judge.judge(q, make_chunk("c3", "record fact-q3-1\nconfirms"));
        CHECK(*j.relevant);
    }
}

TEST_CASE("cached judge serves repeats from the cache") {
    const auto dir = fresh_dir("pooleval-judge-cache");
    const Query q = planted_query();
    const Chunk c = make_chunk("c1", "Record FACT-q3-1 confirms the canonical answer.");

    auto cache = std::make_shared<AdapterCache>(dir);
    CachedJudge judge(std::make_shared<OracleJudge>(std::vector<Query>{q}), cache);

    const auto first = judge.judge(q, c);
    CHECK(judge.inner_calls() == 1);
    const auto second = judge.judge(q, c);
    CHECK(judge.inner_calls() == 1);  // served from cache
    CHECK(*first.relevant == *second.relevant);

    SUBCASE("cache persists across reopen") {
        auto cache2 = std::make_shared<AdapterCache>(dir);
        CachedJudge judge2(std::make_shared<OracleJudge>(std::vector<Query>{q}), cache2);
        const auto third = judge2.judge(q, c);
        CHECK(judge2.inner_calls() == 0);
        CHECK(*third.relevant);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("oracle extractor returns planted sentences with exact spans") {
    const Query q = planted_query();
    OracleExtractor extractor({q});

    SUBCASE("redundancy around the fact is stripped") {
        const std::string gt = "Record FACT-q3-1 confirms the canonical answer.";
        const Chunk c = make_chunk("c1", "redundancyA " + gt);
        const auto ex = extractor.extract(q, c);
        REQUIRE(ex.facts.size() == 1);
        CHECK(ex.facts[0].text == gt);
        CHECK(std::string(utf8::substr(c.text, ex.facts[0].span.start, ex.facts[0].span.end)) ==
              gt);
    }
    SUBCASE("two planted facts give two spans") {
        const Chunk c = make_chunk(
            "c2", "Record FACT-q3-1 confirms the canonical answer. pad. Record FACT-q3-2 "
                  "confirms the canonical answer.");
        const auto ex = extractor.extract(q, c);
        REQUIRE(ex.facts.size() == 2);
        for (const auto& f : ex.facts) {
            CHECK(std::string(utf8::substr(c.text, f.span.start, f.span.end)) == f.text);
        }
    }
    SUBCASE("token-only fallback when the sentence was cut") {
        const Chunk c = make_chunk("c3", "tail fragment FACT-q3-2 confi");
        const auto ex = extractor.extract(q, c);
        REQUIRE(ex.facts.size() == 1);
        CHECK(ex.facts[0].text == "FACT-q3-2");
    }
}

TEST_CASE("locate_span finds exact and fuzzy matches") {
    SUBCASE("exact, with multi-byte prefix") {
        const auto span = locate_span("日本 the needle here", "needle", 1.0);
        REQUIRE(span.has_value());
        CHECK(std::string(utf8::substr("日本 the needle here", span->start, span->end)) ==
              "needle");
    }
    SUBCASE("fuzzy match above the threshold") {
        // One substitution in 20 chars: similarity 0.95.
        const std::string hay = "the refund window is 7 days for members";
        const auto span = locate_span(hay, "refund windoX is 7 d", 0.9);
        REQUIRE(span.has_value());
        const auto matched = std::string(utf8::substr(hay, span->start, span->end));
        CHECK(text::similarity_ratio(text::normalize(matched),
                                     text::normalize("refund windoX is 7 d")) >= 0.9);
    }
    SUBCASE("no match below the threshold") {
        CHECK_FALSE(locate_span("completely different content", "refund window", 0.9).has_value());
    }
}

namespace {

struct ScriptedExtractor : FactExtractor {
    std::vector<std::string> outputs;
    std::string id() const override { return "scripted"; }
    std::string prompt_version() const override { return "v1"; }
    FactExtraction extract(const Query& query, const Chunk& chunk) override {
        // Mimics the remote validation path: exact-or-fuzzy match else drop,
        // whole chunk as fallback.
        FactExtraction out{query.id, chunk.id, {}};
        for (const auto& fact : outputs) {
            if (auto span = locate_span(chunk.text, fact, RemoteExtractor::kFuzzyThreshold)) {
                out.facts.push_back(
                    {std::string(utf8::substr(chunk.text, span->start, span->end)), *span});
            }
        }
        if (out.facts.empty()) {
            out.facts.push_back({chunk.text, {0, utf8::length(chunk.text)}});
        }
        return out;
    }
};

}  // namespace

TEST_CASE("extraction validation drops paraphrases and falls back to the whole chunk") {
    const Query q = planted_query();
    const Chunk c = make_chunk("c1", "the policy allows refunds within seven days of purchase");
    ScriptedExtractor extractor;
    extractor.outputs = {"users may get their money back in a week"};  // paraphrase, no match
    const auto ex = extractor.extract(q, c);
    REQUIRE(ex.facts.size() == 1);
    CHECK(ex.facts[0].text == c.text);  // fallback
    CHECK(ex.facts[0].span.start == 0);
    CHECK(ex.facts[0].span.end == utf8::length(c.text));
}

TEST_CASE("substring property holds for every stored fact") {
    const Query q = planted_query();
    OracleExtractor extractor({q});
    const Chunk c = make_chunk(
        "c1", "Record FACT-q3-1 confirms the canonical answer.   Record FACT-q3-2 confirms "
              "the canonical answer.");
    const auto ex = extractor.extract(q, c);
    for (const auto& f : ex.facts) {
        const auto at_span = std::string(utf8::substr(c.text, f.span.start, f.span.end));
        CHECK(text::normalize(at_span) == text::normalize(f.text));
    }
}

TEST_CASE("noisy judge flips deterministically") {
    const Query q = planted_query();
    auto oracle = std::make_shared<OracleJudge>(std::vector<Query>{q});
    NoisyJudge noisy1(oracle, 0.5, 13);
    NoisyJudge noisy2(oracle, 0.5, 13);
    const Chunk c = make_chunk("c1", "Record FACT-q3-1 confirms the canonical answer.");
    CHECK(*noisy1.judge(q, c).relevant == *noisy2.judge(q, c).relevant);
    CHECK(noisy1.id() == "oracle-judge+noise");

    // With probability 1 every verdict is flipped.
    NoisyJudge always(oracle, 1.0, 13);
    CHECK_FALSE(*always.judge(q, c).relevant);
}

TEST_CASE("remote verdict parser") {
    CHECK(RemoteJudge::parse_verdict("yes") == true);
    CHECK(RemoteJudge::parse_verdict("Yes, it is relevant") == true);
    CHECK(RemoteJudge::parse_verdict("NO") == false);
    CHECK(RemoteJudge::parse_verdict("false") == false);
    CHECK(RemoteJudge::parse_verdict(nlohmann::json{{"relevant", true}}) == true);
    CHECK(RemoteJudge::parse_verdict(true) == true);
    CHECK_FALSE(RemoteJudge::parse_verdict("maybe so").has_value());
    CHECK_FALSE(RemoteJudge::parse_verdict(nlohmann::json::object()).has_value());
}
