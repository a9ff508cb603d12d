#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fxrl {

// Unix seconds for an ISO-8601 UTC timestamp like "2017-01-02T03:00:00Z".
// A trailing 'Z' is optional, a space may stand in for the 'T'.
// Returns nullopt on anything else; no local-time fallback.
std::optional<std::int64_t> parse_iso8601_utc(const std::string& text);

// Inverse of parse_iso8601_utc, always with the trailing 'Z'.
std::string format_iso8601_utc(std::int64_t unix_seconds);

// Renders a span of seconds as "D days HH:MM:SS" (or "HH:MM:SS" under a day).
std::string format_duration(std::int64_t seconds);

}
