#ifndef SMARTDOC_TEXT_HPP
#define SMARTDOC_TEXT_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace smartdoc {

/// Words dropped from complaints before matching. Entry keywords may not use them.
inline constexpr std::array<std::string_view, 15> kStopwords = {
    "i", "have", "a", "an", "the", "my", "in", "got", "do", "you", "too", "is", "it", "me", "and"};

inline bool is_stopword(std::string_view word) {
    return std::find(kStopwords.begin(), kStopwords.end(), word) != kStopwords.end();
}

/// `[a-z_][a-z0-9_]*`
inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    const auto head = s.front();
    if (!((head >= 'a' && head <= 'z') || head == '_')) return false;
    return std::all_of(s.begin() + 1, s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

/// Length of the valid UTF-8 prefix of `s`; equals `s.size()` iff the whole string is valid.
inline std::size_t utf8_valid_prefix(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return i;
        }
        if (i + len > s.size()) return i;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return i;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong forms, surrogates, out of range
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)
            return i;
        i += len;
    }
    return i;
}

inline bool is_valid_utf8(std::string_view s) { return utf8_valid_prefix(s) == s.size(); }

/// Number of code points in valid UTF-8 text.
inline std::size_t utf8_length(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(
        s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

/// First `n` code points of valid UTF-8 text.
inline std::string_view utf8_prefix(std::string_view s, std::size_t n) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            if (seen == n) return s.substr(0, i);
            ++seen;
        }
    }
    return s;
}

/// True if the text holds an ASCII control character (newline, tab, NUL, ...).
inline bool has_control_chars(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x20 || u == 0x7F;
    });
}

} // namespace smartdoc

#endif // SMARTDOC_TEXT_HPP
