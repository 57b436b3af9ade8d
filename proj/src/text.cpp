#include "pooleval/text.hpp"

#include <array>

namespace pooleval::text {

std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

namespace {

bool is_ascii_alnum(uint32_t cp) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

uint32_t ascii_lower(uint32_t cp) {
    return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
}

// Non-ASCII, non-CJK code points that still count as word characters
// (accented Latin, Cyrillic, kana, ...). Punctuation-ish ranges excluded.
bool is_other_letter(uint32_t cp) {
    if (cp < 0x80 || is_cjk(cp)) return false;
    if (is_space_cp(cp)) return false;
    if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFF00 && cp <= 0xFF64) return false;  // fullwidth forms (punct block)
    return true;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    bool current_is_other = false;

    auto flush = [&]() {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
        current_is_other = false;
    };

    size_t pos = 0;
    while (pos < s.size()) {
        const uint32_t cp = utf8::decode(s, pos);
        if (is_ascii_alnum(cp)) {
            if (current_is_other) flush();
            current.push_back(static_cast<char>(ascii_lower(cp)));
        } else if (is_cjk(cp)) {
            flush();
            std::string t;
            utf8::append(t, cp);
            tokens.push_back(std::move(t));
        } else if (is_other_letter(cp)) {
            if (!current.empty() && !current_is_other) flush();
            current_is_other = true;
            utf8::append(current, cp);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::string normalize(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    size_t pos = 0;
    while (pos < s.size()) {
        const uint32_t cp = utf8::decode(s, pos);
        if (is_space_cp(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        utf8::append(out, ascii_lower(cp));
    }
    // Strip trailing sentence terminators (and any space freed up by that).
    while (!out.empty()) {
        // Walk back one code point.
        size_t tail = out.size();
        do {
            --tail;
        } while (tail > 0 && (static_cast<unsigned char>(out[tail]) & 0xC0) == 0x80);
        size_t probe = tail;
        const uint32_t last = utf8::decode(out, probe);
        if (is_sentence_terminator(last) || last == ' ') {
            out.resize(tail);
        } else {
            break;
        }
    }
    return out;
}

size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.empty()) return utf8::length(b);
    if (b.empty()) return utf8::length(a);

    std::vector<uint32_t> ca, cb;
    for (size_t p = 0; p < a.size();) ca.push_back(utf8::decode(a, p));
    for (size_t p = 0; p < b.size();) cb.push_back(utf8::decode(b, p));

    std::vector<size_t> prev(cb.size() + 1), cur(cb.size() + 1);
    for (size_t j = 0; j <= cb.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= ca.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= cb.size(); ++j) {
            const size_t sub = prev[j - 1] + (ca[i - 1] == cb[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[cb.size()];
}

double similarity_ratio(std::string_view a, std::string_view b) {
    const size_t la = utf8::length(a);
    const size_t lb = utf8::length(b);
    const size_t m = std::max(la, lb);
    if (m == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(m);
}

}  // namespace pooleval::text
