#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pooleval::utf8 {

// Decodes the code point starting at byte `pos` and advances `pos` past it.
// Malformed bytes are consumed one at a time and returned as-is, so any
// byte string can be walked to completion.
inline uint32_t decode(std::string_view s, size_t& pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int extra = 0;
    uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return b0;
    }
    if (pos + extra >= s.size()) {
        ++pos;
        return b0;
    }
    for (int i = 1; i <= extra; ++i) {
        const auto bi = static_cast<unsigned char>(s[pos + i]);
        if ((bi & 0xC0) != 0x80) {
            ++pos;
            return b0;
        }
        cp = (cp << 6) | (bi & 0x3F);
    }
    pos += extra + 1;
    return cp;
}

inline size_t length(std::string_view s) {
    size_t pos = 0, n = 0;
    while (pos < s.size()) {
        decode(s, pos);
        ++n;
    }
    return n;
}

// Byte offset of the code point with index `cp_index`; clamps to s.size().
inline size_t byte_offset(std::string_view s, size_t cp_index) {
    size_t pos = 0, n = 0;
    while (pos < s.size() && n < cp_index) {
        decode(s, pos);
        ++n;
    }
    return pos;
}

// Substring by half-open code-point interval [cp_start, cp_end).
inline std::string_view substr(std::string_view s, size_t cp_start, size_t cp_end) {
    const size_t b0 = byte_offset(s, cp_start);
    const size_t b1 = byte_offset(s, cp_end);
    return s.substr(b0, b1 - b0);
}

inline void append(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Precomputed code-point -> byte offset table for one string. Used where a
// document is sliced many times (segmentation, fact spans).
class Index {
public:
    explicit Index(std::string_view s) : text_(s) {
        byte_of_cp_.reserve(s.size() / 2 + 1);
        size_t pos = 0;
        while (pos < s.size()) {
            byte_of_cp_.push_back(pos);
            decode(s, pos);
        }
        byte_of_cp_.push_back(s.size());
    }

    size_t cp_length() const { return byte_of_cp_.size() - 1; }

    size_t byte_of(size_t cp_index) const {
        return byte_of_cp_[cp_index < cp_length() ? cp_index : cp_length()];
    }

    std::string_view slice(size_t cp_start, size_t cp_end) const {
        const size_t b0 = byte_of(cp_start);
        const size_t b1 = byte_of(cp_end);
        return text_.substr(b0, b1 - b0);
    }

    uint32_t at(size_t cp_index) const {
        size_t pos = byte_of(cp_index);
        return decode(text_, pos);
    }

private:
    std::string_view text_;
    std::vector<size_t> byte_of_cp_;
};

}  // namespace pooleval::utf8
