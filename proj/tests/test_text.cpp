#include <doctest.h>

#include "pooleval/text.hpp"
#include "pooleval/utf8.hpp"

using namespace pooleval;

TEST_CASE("utf8 length counts code points") {
    CHECK(utf8::length("") == 0);
    CHECK(utf8::length("abc") == 3);
    CHECK(utf8::length("日本語") == 3);
    CHECK(utf8::length("a日b") == 3);
    CHECK(utf8::length("héllo") == 5);
}

TEST_CASE("utf8 substr slices by code points") {
    const std::string s = "a日本b";
    CHECK(utf8::substr(s, 0, 1) == "a");
    CHECK(utf8::substr(s, 1, 3) == "日本");
    CHECK(utf8::substr(s, 3, 4) == "b");
    CHECK(utf8::substr(s, 0, 4) == s);
}

TEST_CASE("utf8 index round trips") {
    const std::string s = "x。y！z";
    utf8::Index idx(s);
    CHECK(idx.cp_length() == 5);
    CHECK(std::string(idx.slice(1, 2)) == "。");
    CHECK(idx.at(3) == 0xFF01);
}

TEST_CASE("tokenize lowercases ascii runs and splits cjk per ideograph") {
    CHECK(text::tokenize("Hello, World-42!") ==
          std::vector<std::string>{"hello", "world", "42"});
    CHECK(text::tokenize("旅行指南 tips") ==
          std::vector<std::string>{"旅", "行", "指", "南", "tips"});
    CHECK(text::tokenize("") == std::vector<std::string>{});
    CHECK(text::tokenize("FACT-q3-1") == std::vector<std::string>{"fact", "q3", "1"});
}

TEST_CASE("normalize lowercases, collapses whitespace, strips terminal punctuation") {
    CHECK(text::normalize("Refund  within\t7 Days.") == "refund within 7 days");
    CHECK(text::normalize("refund within 7 days") == "refund within 7 days");
    CHECK(text::normalize("  spaced  out  ") == "spaced out");
    CHECK(text::normalize("stop!!?") == "stop");
    CHECK(text::normalize("句号。") == "句号");
    CHECK(text::normalize("") == "");
}

TEST_CASE("fnv1a64 is stable across runs") {
    // Pinned FNV-1a 64 reference values.
    CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(text::hex64(0xdeadbeefULL) == "00000000deadbeef");
}

TEST_CASE("levenshtein and similarity ratio") {
    CHECK(text::levenshtein("kitten", "sitting") == 3);
    CHECK(text::levenshtein("", "abc") == 3);
    CHECK(text::similarity_ratio("same", "same") == doctest::Approx(1.0));
    CHECK(text::similarity_ratio("", "") == doctest::Approx(1.0));
    CHECK(text::similarity_ratio("abcd", "abce") == doctest::Approx(0.75));
}

TEST_CASE("sentence terminators include fullwidth forms") {
    CHECK(text::is_sentence_terminator('.'));
    CHECK(text::is_sentence_terminator(0x3002));
    CHECK(text::is_sentence_terminator(0xFF1F));
    CHECK_FALSE(text::is_sentence_terminator(','));
}
