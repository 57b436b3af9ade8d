#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pooleval/utf8.hpp"

namespace pooleval::text {

// FNV-1a 64-bit. Stable across platforms and runs; used for cache keys,
// fact ids, and report digests. Cache lookups verify the full key material,
// so a collision can never return the wrong record.
inline uint64_t fnv1a64(std::string_view s, uint64_t seed = 0xcbf29ce484222325ULL) {
    uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(uint64_t v);

inline bool is_sentence_terminator(uint32_t cp) {
    return cp == '.' || cp == '!' || cp == '?' ||
           cp == 0x3002 /* 。 */ || cp == 0xFF01 /* ！ */ || cp == 0xFF1F /* ？ */;
}

inline bool is_space_cp(uint32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\r' || cp == '\n' ||
           cp == 0x3000 /* ideographic space */;
}

inline bool is_cjk(uint32_t cp) {
    return (cp >= 0x3400 && cp <= 0x9FFF) || (cp >= 0xF900 && cp <= 0xFAFF);
}

// Tokenizer shared by the BM25 index and the hashed bag-of-words embedder:
// ASCII alphanumeric runs are lowercased into one token, each CJK ideograph
// is its own token, and runs of other non-ASCII letters pass through
// unmodified. No stemming.
std::vector<std::string> tokenize(std::string_view s);

// Canonical text normalization for fact matching: ASCII lowercase, collapse
// whitespace runs to a single space, trim, strip trailing sentence
// terminators.
std::string normalize(std::string_view s);

size_t levenshtein(std::string_view a, std::string_view b);

// 1 - edit_distance / max_len, on the strings as given (callers normalize
// first). Both empty -> 1.0.
double similarity_ratio(std::string_view a, std::string_view b);

}  // namespace pooleval::text
