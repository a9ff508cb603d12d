#include "fxrl/kvconfig.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fxrl::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}

std::optional<std::string> KeyValues::get(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    return std::nullopt;
}

KeyValues parse_kv_text(const std::string& text, const std::string& origin) {
    KeyValues kv;
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + " line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + " line " + std::to_string(line_no) + ": empty key");
        if (kv.has(key))
            throw ConfigError(origin + " line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "'");
        kv.entries.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

KeyValues parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str(), path);
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string canonical_text(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv.entries) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

std::string hash_hex(const KeyValues& kv) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_text(kv))));
    return buf;
}

}
