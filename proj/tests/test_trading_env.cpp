#include "doctest.h"

#include <set>

#include "fxrl/trading_env.hpp"
#include "test_helpers.hpp"

using namespace fxrl;
using env::Action;

namespace {

data::DatasetRegistry one_pair_registry(std::size_t n = 120, std::uint64_t seed = 9) {
    std::map<std::string, data::CandleSeries> series;
    series["EURUSD"] = testutil::random_walk_series(n, seed);
    return testutil::make_registry(std::move(series), 20);
}

env::EnvConfig small_config(std::size_t window = 4, std::size_t episode_len = 10) {
    env::EnvConfig cfg;
    cfg.window = window;
    cfg.episode_len = episode_len;
    cfg.scenario = env::Scenario::sc;
    cfg.sc_pair = "EURUSD";
    return cfg;
}

}

TEST_CASE("action strings and directions") {
    CHECK(env::direction(Action::long_side) == 1.0);
    CHECK(env::direction(Action::short_side) == -1.0);
    CHECK(env::direction(Action::neutral) == 0.0);
    CHECK(std::string(env::to_string(Action::long_side)) == "long");
    CHECK(env::action_from_string("short") == Action::short_side);
    CHECK_THROWS_AS(env::action_from_string("hold"), env::EnvError);
}

TEST_CASE("encode_history is one-hot per slot, oldest first") {
    const std::vector<Action> h = {Action::neutral, Action::long_side,
                                   Action::short_side};
    const std::vector<double> enc = env::encode_history(h);
    REQUIRE(enc.size() == 9);
    CHECK(enc == std::vector<double>{0, 0, 1, 1, 0, 0, 0, 1, 0});
}

TEST_CASE("reward is position direction times next relative close move") {
    const data::DatasetRegistry reg = one_pair_registry();
    env::TradingEnv e(reg, small_config());
    const data::CandleSeries& train = reg.at("EURUSD").train;

    e.reset_at("EURUSD", 10);
    const double z = (train[11].close - train[10].close) / train[10].close;

    SUBCASE("long") {
        const env::StepResult r = e.step(Action::long_side);
        CHECK(r.reward == z);
        CHECK(r.price_change == z);
    }
    SUBCASE("short") {
        const env::StepResult r = e.step(Action::short_side);
        CHECK(r.reward == -z);
        CHECK(r.price_change == z);
    }
    SUBCASE("neutral") {
        const env::StepResult r = e.step(Action::neutral);
        CHECK(r.reward == 0.0);
        CHECK(r.price_change == z);
    }
}

TEST_CASE("long and short rewards are exact mirrors along an episode") {
    const data::DatasetRegistry reg = one_pair_registry();
    env::TradingEnv a(reg, small_config());
    env::TradingEnv b(reg, small_config());
    a.reset_at("EURUSD", 12);
    b.reset_at("EURUSD", 12);
    for (int i = 0; i < 10; ++i) {
        const double ra = a.step(Action::long_side).reward;
        const double rb = b.step(Action::short_side).reward;
        CHECK(ra == -rb);
    }
}

TEST_CASE("action history shifts by one each step") {
    const data::DatasetRegistry reg = one_pair_registry();
    env::TradingEnv e(reg, small_config(3, 8));
    env::Observation obs = e.reset_at("EURUSD", 10);

    // fresh episode: all-neutral history
    CHECK(obs.action_history ==
          std::vector<double>{0, 0, 1, 0, 0, 1, 0, 0, 1});

    obs = e.step(Action::long_side).observation;
    CHECK(obs.action_history ==
          std::vector<double>{0, 0, 1, 0, 0, 1, 1, 0, 0});

    obs = e.step(Action::short_side).observation;
    CHECK(obs.action_history ==
          std::vector<double>{0, 0, 1, 1, 0, 0, 0, 1, 0});
}

TEST_CASE("observation window tracks the current candle") {
    const data::DatasetRegistry reg = one_pair_registry();
    const std::size_t window = 4;
    env::TradingEnv e(reg, small_config(window, 6));
    const data::CandleSeries& train = reg.at("EURUSD").train;

    env::Observation obs = e.reset_at("EURUSD", 20);
    const features::FeatureWindow at_start = features::build_window(train, 20, window);
    CHECK(obs.feature_rows == at_start.values);

    obs = e.step(Action::neutral).observation;
    const features::FeatureWindow after_one = features::build_window(train, 21, window);
    CHECK(obs.feature_rows == after_one.values);
}

TEST_CASE("episode terminates after episode_len steps") {
    const data::DatasetRegistry reg = one_pair_registry();
    env::TradingEnv e(reg, small_config(4, 5));
    e.reset_at("EURUSD", 10);
    for (int i = 0; i < 5; ++i) {
        CHECK_FALSE(e.done());
        const env::StepResult r = e.step(Action::long_side);
        CHECK(r.done == (i == 4));
    }
    CHECK(e.done());
    CHECK(e.steps_taken() == 5);
    CHECK_THROWS_AS(e.step(Action::neutral), env::EnvError);
}

TEST_CASE("use before reset is rejected") {
    const data::DatasetRegistry reg = one_pair_registry();
    env::TradingEnv e(reg, small_config());
    CHECK_THROWS_AS(e.observation(), env::EnvError);
    CHECK_THROWS_AS(e.step(Action::neutral), env::EnvError);
}

TEST_CASE("reset_at validates the start index") {
    const data::DatasetRegistry reg = one_pair_registry(120); // train size 100
    env::TradingEnv e(reg, small_config(4, 10));
    CHECK_THROWS_AS(e.reset_at("EURUSD", 3), env::EnvError);
    CHECK_THROWS_AS(e.reset_at("EURUSD", 90), env::EnvError);
    CHECK_NOTHROW(e.reset_at("EURUSD", 4));
    CHECK_NOTHROW(e.reset_at("EURUSD", 89));
}

TEST_CASE("sc scenario needs a known pair") {
    const data::DatasetRegistry reg = one_pair_registry();
    env::EnvConfig cfg = small_config();
    cfg.sc_pair = "";
    CHECK_THROWS_AS(env::TradingEnv(reg, cfg), env::EnvError);
    cfg.sc_pair = "USDJPY";
    CHECK_THROWS_AS(env::TradingEnv(reg, cfg), data::DataError);
}

TEST_CASE("mc scenario samples every pair eventually") {
    std::map<std::string, data::CandleSeries> series;
    series["EURUSD"] = testutil::random_walk_series(120, 1);
    series["GBPUSD"] = testutil::random_walk_series(120, 2);
    series["USDJPY"] = testutil::random_walk_series(120, 3);
    const data::DatasetRegistry reg = testutil::make_registry(std::move(series), 20);

    env::EnvConfig cfg = small_config();
    cfg.scenario = env::Scenario::mc;
    cfg.sc_pair.clear();
    env::TradingEnv e(reg, cfg);

    Rng rng(17);
    std::set<std::string> pairs;
    for (int i = 0; i < 60; ++i) {
        e.reset(rng);
        pairs.insert(e.descriptor().pair);
    }
    CHECK(pairs.size() == 3);
}

TEST_CASE("same descriptor replays the same episode") {
    const data::DatasetRegistry reg = one_pair_registry();
    env::TradingEnv a(reg, small_config());
    env::TradingEnv b(reg, small_config());

    Rng rng(23);
    const env::Observation first = a.reset(rng);
    const env::Observation replay =
        b.reset_at(a.descriptor().pair, a.descriptor().start);
    CHECK(first.feature_rows == replay.feature_rows);
    CHECK(first.action_history == replay.action_history);

    for (int i = 0; i < 5; ++i) {
        const Action act = static_cast<Action>(i % 3);
        const env::StepResult ra = a.step(act);
        const env::StepResult rb = b.step(act);
        CHECK(ra.reward == rb.reward);
        CHECK(ra.observation.feature_rows == rb.observation.feature_rows);
    }
}
