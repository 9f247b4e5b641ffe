#ifndef SMARTDOC_TIMESTAMP_HPP
#define SMARTDOC_TIMESTAMP_HPP

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace smartdoc {

/// UTC instant with whole-second precision.
using Timestamp = std::chrono::sys_seconds;
using Hours = std::chrono::hours;

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
inline std::string format_rfc3339(Timestamp t) {
    using namespace std::chrono;
    const auto day_start = floor<days>(t);
    const year_month_day ymd{day_start};
    const hh_mm_ss hms{t - day_start};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u""T%02d:%02d:%02dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

namespace detail {

inline bool read_fixed(std::string_view s, std::size_t pos, std::size_t width, int& out) {
    if (pos + width > s.size()) return false;
    for (std::size_t i = pos; i < pos + width; ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + width, out);
    return ec == std::errc{} && ptr == s.data() + pos + width;
}

} // namespace detail

/// Parses an RFC 3339 date-time (`Z` or `±HH:MM` offset, optional fraction,
/// which is truncated). Returns nullopt on any malformed input.
inline std::optional<Timestamp> parse_rfc3339(std::string_view s) {
    using namespace std::chrono;
    int y, mo, d, h, mi, sec;
    if (!detail::read_fixed(s, 0, 4, y) || s.size() < 20 || s[4] != '-' ||
        !detail::read_fixed(s, 5, 2, mo) || s[7] != '-' || !detail::read_fixed(s, 8, 2, d) ||
        (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || !detail::read_fixed(s, 11, 2, h) ||
        s[13] != ':' || !detail::read_fixed(s, 14, 2, mi) || s[16] != ':' ||
        !detail::read_fixed(s, 17, 2, sec))
        return std::nullopt;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const auto digits_start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == digits_start) return std::nullopt;
    }
    if (pos >= s.size()) return std::nullopt;
    int offset_minutes = 0;
    if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
        int oh, om;
        if (!detail::read_fixed(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
            !detail::read_fixed(s, pos + 4, 2, om) || oh > 23 || om > 59)
            return std::nullopt;
        offset_minutes = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
        pos += 6;
    } else {
        return std::nullopt;
    }
    if (pos != s.size()) return std::nullopt;

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    // Leap seconds (60) are rejected along with every other out-of-range field.
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} - minutes{offset_minutes};
}

inline Timestamp utc_now() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

} // namespace smartdoc

#endif // SMARTDOC_TIMESTAMP_HPP
