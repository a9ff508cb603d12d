#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fxrl::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ordered "key = value" pairs from a config file. '#' starts a comment,
// blank lines are skipped, duplicate keys are an error.
struct KeyValues {
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> get(const std::string& key) const;
    bool has(const std::string& key) const { return get(key).has_value(); }
};

KeyValues parse_kv_text(const std::string& text, const std::string& origin);
KeyValues parse_kv_file(const std::string& path);

// FNV-1a over the canonical "key = value\n" rendering; used as the config
// fingerprint in run manifests.
std::uint64_t fnv1a64(const std::string& text);
std::string canonical_text(const KeyValues& kv);
std::string hash_hex(const KeyValues& kv);

}
