#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fxrl/rng.hpp"

namespace fxrl::data {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One hourly OHLC bar. Timestamps are UTC unix seconds; gaps between bars
// are allowed and ignored, stepping is index based.
struct Candle {
    std::int64_t time = 0;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
};

struct CandleSeries {
    std::string pair;
    std::vector<Candle> candles;

    std::size_t size() const { return candles.size(); }
    bool empty() const { return candles.empty(); }
    const Candle& operator[](std::size_t i) const { return candles[i]; }
};

// Why a candle (or row) was rejected. line is the 1-based line number in
// the source file, counting the header as line 1.
struct RowViolation {
    std::size_t line = 0;
    std::string reason;
};

struct ScanResult {
    CandleSeries series;        // rows that passed validation
    std::vector<RowViolation> violations;
    std::size_t total_rows = 0; // data rows seen, good or bad
};

// Lenient read used by the inspect command: collects every violation with
// its line number, keeps the good rows. Throws DataError only when the file
// is unreadable or has a bad/missing header.
ScanResult scan_candles(const std::string& path, const std::string& pair);

// Strict read used everywhere else: any violation throws DataError naming
// the first offending line.
CandleSeries load_candles(const std::string& path, const std::string& pair);

// Writes "time,open,high,low,close" rows with round-trip double precision.
void save_candles(const CandleSeries& series, const std::string& path);

// Validates one candle against the price invariants. Returns an empty
// string when fine, otherwise the reason text.
std::string candle_violation(const Candle& c);

// Chronological split: train takes candles with time < boundary, test the
// rest. Requires first.time < boundary <= last.time so both sides are
// nonempty; the boundary candle itself lands in test.
std::pair<CandleSeries, CandleSeries> split_by_date(const CandleSeries& series,
                                                    std::int64_t boundary);

// Inclusive range [window, size - episode_len - 1] of valid episode start
// indexes, so that every step of the episode has a lookback window and a
// next candle. Throws DataError when the series is too short.
std::pair<std::size_t, std::size_t> episode_start_range(std::size_t series_size,
                                                        std::size_t episode_len,
                                                        std::size_t window);

// Uniform draw from episode_start_range.
std::size_t sample_episode_start(std::size_t series_size, std::size_t episode_len,
                                 std::size_t window, Rng& rng);

struct PairDataset {
    CandleSeries train;
    CandleSeries test;
};

// All pairs for a run, already split. Pair names iterate in sorted order.
class DatasetRegistry {
public:
    DatasetRegistry(std::map<std::string, CandleSeries> series, std::int64_t split_boundary);

    const std::vector<std::string>& pair_names() const { return names_; }
    const PairDataset& at(const std::string& pair) const;
    std::int64_t split_boundary() const { return boundary_; }
    std::size_t size() const { return names_.size(); }

    // Uniform pair choice for multi-currency episode resets.
    const std::string& sample_pair(Rng& rng) const;

private:
    std::map<std::string, PairDataset> pairs_;
    std::vector<std::string> names_;
    std::int64_t boundary_ = 0;
};

// Registry config: one "split_boundary = <iso8601>" line plus one
// "PAIR = relative/or/absolute.csv" line per pair. '#' starts a comment.
// Relative csv paths resolve against the config file's directory.
DatasetRegistry load_registry(const std::string& config_path);

}
