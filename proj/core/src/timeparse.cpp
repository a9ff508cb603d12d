#include "fxrl/timeparse.hpp"

#include <cstdio>
#include <ctime>

namespace fxrl {

std::optional<std::int64_t> parse_iso8601_utc(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0, tail = 0;
    int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%c",
                        &y, &mo, &d, &sep, &h, &mi, &s, &tail);
    if (n < 7 || (sep != 'T' && sep != ' ')) return std::nullopt;
    if (n == 8 && tail != 'Z') return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
    if (h > 23 || mi > 59 || s > 60) return std::nullopt;

    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = s;
    std::time_t t = timegm(&tm);
    if (t == static_cast<std::time_t>(-1)) return std::nullopt;
    return static_cast<std::int64_t>(t);
}

std::string format_iso8601_utc(std::int64_t unix_seconds) {
    std::time_t t = static_cast<std::time_t>(unix_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::string format_duration(std::int64_t seconds) {
    if (seconds < 0) seconds = 0;
    const std::int64_t days = seconds / 86400;
    const std::int64_t rem = seconds % 86400;
    char buf[48];
    if (days > 0) {
        std::snprintf(buf, sizeof(buf), "%lld days %02lld:%02lld:%02lld",
                      static_cast<long long>(days),
                      static_cast<long long>(rem / 3600),
                      static_cast<long long>((rem % 3600) / 60),
                      static_cast<long long>(rem % 60));
    } else {
        std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld",
                      static_cast<long long>(rem / 3600),
                      static_cast<long long>((rem % 3600) / 60),
                      static_cast<long long>(rem % 60));
    }
    return buf;
}

}
