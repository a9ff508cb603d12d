#include "doctest.h"

#include <set>

#include "fxrl/market_data.hpp"
#include "fxrl/timeparse.hpp"
#include "test_helpers.hpp"

using namespace fxrl;
using testutil::TempDir;

namespace {

const char* kGoodCsv =
    "time,open,high,low,close\n"
    "2020-01-01T00:00:00Z,1.10,1.12,1.09,1.11\n"
    "2020-01-01T01:00:00Z,1.11,1.13,1.10,1.12\n"
    "2020-01-01T02:00:00Z,1.12,1.12,1.08,1.09\n";

}

TEST_CASE("iso8601 parse and format round trip") {
    auto t = parse_iso8601_utc("2020-01-01T00:00:00Z");
    REQUIRE(t.has_value());
    CHECK(*t == 1577836800);
    CHECK(format_iso8601_utc(*t) == "2020-01-01T00:00:00Z");

    CHECK(parse_iso8601_utc("2020-01-01 00:00:00").has_value()); // space separator
    CHECK_FALSE(parse_iso8601_utc("2020-13-01T00:00:00Z").has_value());
    CHECK_FALSE(parse_iso8601_utc("not a time").has_value());
    CHECK_FALSE(parse_iso8601_utc("2020-01-01X00:00:00").has_value());
}

TEST_CASE("candle_violation names the failed invariant") {
    data::Candle ok{0, 1.10, 1.12, 1.09, 1.11};
    CHECK(data::candle_violation(ok).empty());

    data::Candle nan_price = ok;
    nan_price.high = std::nan("");
    CHECK(data::candle_violation(nan_price) == "non-finite price");

    data::Candle nonpos = ok;
    nonpos.low = 0.0;
    CHECK(data::candle_violation(nonpos) == "non-positive price");

    data::Candle low_high{0, 1.10, 1.12, 1.105, 1.11};
    CHECK(data::candle_violation(low_high) == "low above open or close");

    data::Candle high_low{0, 1.10, 1.105, 1.09, 1.11};
    CHECK(data::candle_violation(high_low) == "high below open or close");
}

TEST_CASE("scan_candles keeps good rows and reports line numbers") {
    TempDir dir;
    const std::string path = dir.file("mixed.csv");
    testutil::write_file(path,
                         "time,open,high,low,close\n"
                         "2020-01-01T00:00:00Z,1.10,1.12,1.09,1.11\n"
                         "2020-01-01T01:00:00Z,1.11,1.13\n"
                         "2020-01-01T02:00:00Z,1.12,1.12,1.08,bad\n"
                         "2020-01-01T03:00:00Z,1.12,1.11,1.08,1.09\n"
                         "2020-01-01T03:30:00Z,1.09,1.10,1.08,1.09\n"
                         "2020-01-01T02:30:00Z,1.09,1.10,1.08,1.09\n"
                         "\n"
                         "2020-01-01T04:00:00Z,1.09,1.10,1.08,1.09\n");

    const data::ScanResult scan = data::scan_candles(path, "EURUSD");
    // blank lines are skipped before counting
    CHECK(scan.total_rows == 7);
    CHECK(scan.series.size() == 3);
    REQUIRE(scan.violations.size() == 4);
    // the header is line 1, so the first data row is line 2
    CHECK(scan.violations[0].line == 3);
    CHECK(scan.violations[0].reason == "expected 5 fields, got 3");
    CHECK(scan.violations[1].line == 4);
    CHECK(scan.violations[1].reason == "unparseable price field");
    CHECK(scan.violations[2].line == 5);
    CHECK(scan.violations[2].reason == "high below open or close");
    // ordering is judged against the last accepted row, not the last seen one
    CHECK(scan.violations[3].line == 7);
    CHECK(scan.violations[3].reason == "timestamp not strictly increasing");
    CHECK(scan.series[1].time == scan.series[0].time + 3 * 3600 + 1800);
    CHECK(scan.series[2].time == scan.series[0].time + 4 * 3600);
}

TEST_CASE("scan_candles throws on structural problems") {
    TempDir dir;
    CHECK_THROWS_AS(data::scan_candles(dir.file("missing.csv"), "X"), data::DataError);

    const std::string empty = dir.file("empty.csv");
    testutil::write_file(empty, "");
    CHECK_THROWS_AS(data::scan_candles(empty, "X"), data::DataError);

    const std::string header = dir.file("badheader.csv");
    testutil::write_file(header, "date,o,h,l,c\n2020-01-01T00:00:00Z,1,1,1,1\n");
    CHECK_THROWS_AS(data::scan_candles(header, "X"), data::DataError);

    const std::string no_rows = dir.file("norows.csv");
    testutil::write_file(no_rows, "time,open,high,low,close\n");
    CHECK_THROWS_AS(data::scan_candles(no_rows, "X"), data::DataError);
}

TEST_CASE("load_candles is strict and names the first bad line") {
    TempDir dir;
    const std::string path = dir.file("strict.csv");
    testutil::write_file(path,
                         "time,open,high,low,close\n"
                         "2020-01-01T00:00:00Z,1.10,1.12,1.09,1.11\n"
                         "2020-01-01T01:00:00Z,1.11,1.13,1.10,zzz\n");
    try {
        data::load_candles(path, "EURUSD");
        FAIL("expected DataError");
    } catch (const data::DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    const std::string good = dir.file("good.csv");
    testutil::write_file(good, kGoodCsv);
    const data::CandleSeries s = data::load_candles(good, "EURUSD");
    CHECK(s.pair == "EURUSD");
    REQUIRE(s.size() == 3);
    CHECK(s[0].time == 1577836800);
    CHECK(s[2].close == doctest::Approx(1.09).epsilon(1e-15));
}

TEST_CASE("save_candles round trips doubles exactly") {
    TempDir dir;
    const data::CandleSeries original = testutil::random_walk_series(64, 99);
    const std::string path = dir.file("roundtrip.csv");
    data::save_candles(original, path);
    const data::CandleSeries loaded = data::load_candles(path, original.pair);
    REQUIRE(loaded.size() == original.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
        CHECK(loaded[i].time == original[i].time);
        CHECK(loaded[i].open == original[i].open);
        CHECK(loaded[i].high == original[i].high);
        CHECK(loaded[i].low == original[i].low);
        CHECK(loaded[i].close == original[i].close);
    }
}

TEST_CASE("split_by_date puts the boundary candle in test") {
    const data::CandleSeries s = testutil::flat_series(10);
    const std::int64_t boundary = s[4].time;
    auto [train, test] = data::split_by_date(s, boundary);
    CHECK(train.size() == 4);
    CHECK(test.size() == 6);
    CHECK(train.candles.back().time < boundary);
    CHECK(test.candles.front().time == boundary);

    CHECK_THROWS_AS(data::split_by_date(s, s[0].time), data::DataError);
    CHECK_THROWS_AS(data::split_by_date(s, s[0].time - 1), data::DataError);
    CHECK_THROWS_AS(data::split_by_date(s, s[9].time + 1), data::DataError);
    CHECK_NOTHROW(data::split_by_date(s, s[9].time));
}

TEST_CASE("episode_start_range bounds") {
    // 617 candles leave exactly one start for a 600-step episode with window 16
    auto [lo, hi] = data::episode_start_range(617, 600, 16);
    CHECK(lo == 16);
    CHECK(hi == 16);
    CHECK_THROWS_AS(data::episode_start_range(616, 600, 16), data::DataError);

    // every start in the range leaves a full window behind and a next candle
    // for each of the episode_len steps
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t window = 1 + rng.uniform_index(8);
        const std::size_t ep = 1 + rng.uniform_index(50);
        const std::size_t size = window + ep + 1 + rng.uniform_index(100);
        auto [a, b] = data::episode_start_range(size, ep, window);
        CHECK(a == window);
        CHECK(b == size - ep - 1);
        CHECK(a <= b);
        CHECK(b + ep + 1 <= size);
    }
}

TEST_CASE("sample_episode_start stays in range and covers it") {
    Rng rng(7);
    std::set<std::size_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const std::size_t start = data::sample_episode_start(40, 10, 4, rng);
        CHECK(start >= 4);
        CHECK(start <= 29);
        seen.insert(start);
    }
    CHECK(seen.size() == 26);
}

TEST_CASE("registry splits pairs and iterates names sorted") {
    std::map<std::string, data::CandleSeries> series;
    series["GBPUSD"] = testutil::flat_series(100, 1.3);
    series["EURUSD"] = testutil::flat_series(100, 1.1);
    const data::DatasetRegistry reg = testutil::make_registry(std::move(series), 20);

    REQUIRE(reg.size() == 2);
    CHECK(reg.pair_names() == std::vector<std::string>{"EURUSD", "GBPUSD"});
    CHECK(reg.at("EURUSD").train.size() == 80);
    CHECK(reg.at("EURUSD").test.size() == 20);
    CHECK_THROWS_AS(reg.at("USDJPY"), data::DataError);

    Rng rng(3);
    std::set<std::string> sampled;
    for (int i = 0; i < 100; ++i) sampled.insert(reg.sample_pair(rng));
    CHECK(sampled.size() == 2);
}

TEST_CASE("load_registry resolves relative csv paths and validates keys") {
    TempDir dir;
    data::save_candles(testutil::random_walk_series(60, 1), dir.file("eurusd.csv"));
    data::save_candles(testutil::random_walk_series(60, 2), dir.file("gbpusd.csv"));

    const std::int64_t boundary = testutil::kT0 + 50 * testutil::kHour;
    const std::string cfg = dir.file("registry.conf");
    testutil::write_file(cfg,
                         "# data registry\n"
                         "split_boundary = " + format_iso8601_utc(boundary) + "\n"
                         "EURUSD = eurusd.csv\n"
                         "GBPUSD = " + dir.file("gbpusd.csv") + "\n");

    const data::DatasetRegistry reg = data::load_registry(cfg);
    CHECK(reg.pair_names() == std::vector<std::string>{"EURUSD", "GBPUSD"});
    CHECK(reg.split_boundary() == boundary);
    CHECK(reg.at("EURUSD").train.size() == 50);
    CHECK(reg.at("GBPUSD").test.size() == 10);

    const std::string no_boundary = dir.file("nb.conf");
    testutil::write_file(no_boundary, "EURUSD = eurusd.csv\n");
    CHECK_THROWS_AS(data::load_registry(no_boundary), data::DataError);

    const std::string bad_boundary = dir.file("bb.conf");
    testutil::write_file(bad_boundary,
                         "split_boundary = whenever\nEURUSD = eurusd.csv\n");
    CHECK_THROWS_AS(data::load_registry(bad_boundary), data::DataError);

    const std::string no_pairs = dir.file("np.conf");
    testutil::write_file(no_pairs, "split_boundary = 2020-01-01T00:00:00Z\n");
    CHECK_THROWS_AS(data::load_registry(no_pairs), data::DataError);
}

TEST_CASE("registry rejects a split that empties a partition") {
    std::map<std::string, data::CandleSeries> series;
    series["EURUSD"] = testutil::flat_series(50);
    // boundary before the series start
    CHECK_THROWS_AS(data::DatasetRegistry(series, testutil::kT0 - testutil::kHour),
                    data::DataError);
    // boundary beyond the series end
    CHECK_THROWS_AS(
        data::DatasetRegistry(series, testutil::kT0 + 200 * testutil::kHour),
        data::DataError);
}
