#include "fxrl/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fxrl/kvconfig.hpp"
#include "fxrl/timeparse.hpp"

namespace fxrl::data {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_price(const std::string& field, double& out) {
    const std::string t = trim(field);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

constexpr const char* kHeader = "time,open,high,low,close";

}

std::string candle_violation(const Candle& c) {
    const double prices[4] = {c.open, c.high, c.low, c.close};
    for (double p : prices) {
        if (!std::isfinite(p)) return "non-finite price";
        if (p <= 0.0) return "non-positive price";
    }
    if (c.low > std::min(c.open, c.close)) return "low above open or close";
    if (c.high < std::max(c.open, c.close)) return "high below open or close";
    return "";
}

ScanResult scan_candles(const std::string& path, const std::string& pair) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open candle file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty candle file: " + path);
    if (trim(line) != kHeader)
        throw DataError(path + ": bad header, expected '" + kHeader + "'");

    ScanResult result;
    result.series.pair = pair;
    std::size_t line_no = 1;
    std::int64_t prev_time = 0;
    bool have_prev = false;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        ++result.total_rows;

        std::vector<std::string> fields;
        std::stringstream ss(row);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);

        if (fields.size() != 5) {
            result.violations.push_back({line_no, "expected 5 fields, got " +
                                                   std::to_string(fields.size())});
            continue;
        }

        auto ts = parse_iso8601_utc(trim(fields[0]));
        if (!ts) {
            result.violations.push_back({line_no, "unparseable timestamp '" +
                                                   trim(fields[0]) + "'"});
            continue;
        }

        Candle c;
        c.time = *ts;
        if (!parse_price(fields[1], c.open) || !parse_price(fields[2], c.high) ||
            !parse_price(fields[3], c.low) || !parse_price(fields[4], c.close)) {
            result.violations.push_back({line_no, "unparseable price field"});
            continue;
        }

        if (std::string why = candle_violation(c); !why.empty()) {
            result.violations.push_back({line_no, why});
            continue;
        }

        if (have_prev && c.time <= prev_time) {
            result.violations.push_back({line_no, "timestamp not strictly increasing"});
            continue;
        }
        prev_time = c.time;
        have_prev = true;
        result.series.candles.push_back(c);
    }

    if (result.total_rows == 0) throw DataError(path + ": no data rows");
    return result;
}

CandleSeries load_candles(const std::string& path, const std::string& pair) {
    ScanResult scanned = scan_candles(path, pair);
    if (!scanned.violations.empty()) {
        const RowViolation& v = scanned.violations.front();
        throw DataError(path + " line " + std::to_string(v.line) + ": " + v.reason);
    }
    return std::move(scanned.series);
}

void save_candles(const CandleSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write candle file: " + path);
    out << kHeader << "\n";
    char buf[160];
    for (const Candle& c : series.candles) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n",
                      format_iso8601_utc(c.time).c_str(), c.open, c.high, c.low, c.close);
        out << buf;
    }
}

std::pair<CandleSeries, CandleSeries> split_by_date(const CandleSeries& series,
                                                    std::int64_t boundary) {
    if (series.empty()) throw DataError("split_by_date: empty series");
    if (boundary <= series.candles.front().time || boundary > series.candles.back().time)
        throw DataError("split boundary " + format_iso8601_utc(boundary) +
                        " outside series range " +
                        format_iso8601_utc(series.candles.front().time) + " .. " +
                        format_iso8601_utc(series.candles.back().time));

    CandleSeries train, test;
    train.pair = series.pair;
    test.pair = series.pair;
    for (const Candle& c : series.candles)
        (c.time < boundary ? train : test).candles.push_back(c);
    return {std::move(train), std::move(test)};
}

std::pair<std::size_t, std::size_t> episode_start_range(std::size_t series_size,
                                                        std::size_t episode_len,
                                                        std::size_t window) {
    if (episode_len == 0) throw DataError("episode_len must be positive");
    if (window == 0) throw DataError("window must be positive");
    // Start i needs candles [i - window, i] behind it and candle
    // i + episode_len ahead of it.
    if (series_size < window + episode_len + 1 ||
        series_size - episode_len - 1 < window)
        throw DataError("series of " + std::to_string(series_size) +
                        " candles too short for episode_len " +
                        std::to_string(episode_len) + " with window " +
                        std::to_string(window));
    return {window, series_size - episode_len - 1};
}

std::size_t sample_episode_start(std::size_t series_size, std::size_t episode_len,
                                 std::size_t window, Rng& rng) {
    auto [lo, hi] = episode_start_range(series_size, episode_len, window);
    return lo + static_cast<std::size_t>(rng.uniform_index(hi - lo + 1));
}

DatasetRegistry::DatasetRegistry(std::map<std::string, CandleSeries> series,
                                 std::int64_t split_boundary)
    : boundary_(split_boundary) {
    if (series.empty()) throw DataError("registry has no pairs");
    for (auto& [name, full] : series) {
        auto [train, test] = split_by_date(full, split_boundary);
        if (train.empty() || test.empty())
            throw DataError("pair " + name + ": empty train or test partition");
        pairs_.emplace(name, PairDataset{std::move(train), std::move(test)});
        names_.push_back(name);
    }
}

const PairDataset& DatasetRegistry::at(const std::string& pair) const {
    auto it = pairs_.find(pair);
    if (it == pairs_.end()) throw DataError("unknown pair: " + pair);
    return it->second;
}

const std::string& DatasetRegistry::sample_pair(Rng& rng) const {
    return names_[static_cast<std::size_t>(rng.uniform_index(names_.size()))];
}

DatasetRegistry load_registry(const std::string& config_path) {
    const config::KeyValues kv = config::parse_kv_file(config_path);
    const std::filesystem::path base = std::filesystem::path(config_path).parent_path();

    std::optional<std::int64_t> boundary;
    std::map<std::string, CandleSeries> series;
    for (const auto& [key, value] : kv.entries) {
        if (key == "split_boundary") {
            boundary = parse_iso8601_utc(value);
            if (!boundary)
                throw DataError("registry: bad split_boundary '" + value + "'");
            continue;
        }
        std::filesystem::path csv(value);
        if (csv.is_relative()) csv = base / csv;
        series.emplace(key, load_candles(csv.string(), key));
    }
    if (!boundary) throw DataError("registry: missing split_boundary");
    if (series.empty()) throw DataError("registry: no pair entries");
    return DatasetRegistry(std::move(series), *boundary);
}

}
