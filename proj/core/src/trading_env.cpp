#include "fxrl/trading_env.hpp"

#include <algorithm>

namespace fxrl::env {

const char* to_string(Action a) {
    switch (a) {
        case Action::long_side: return "long";
        case Action::short_side: return "short";
        default: return "neutral";
    }
}

Action action_from_string(const std::string& s) {
    if (s == "long") return Action::long_side;
    if (s == "short") return Action::short_side;
    if (s == "neutral") return Action::neutral;
    throw EnvError("unknown action '" + s + "'");
}

std::vector<double> encode_history(const std::vector<Action>& history) {
    std::vector<double> out(history.size() * kNumActions, 0.0);
    for (std::size_t k = 0; k < history.size(); ++k)
        out[k * kNumActions + static_cast<std::size_t>(history[k])] = 1.0;
    return out;
}

TradingEnv::TradingEnv(const data::DatasetRegistry& registry, EnvConfig config)
    : registry_(&registry), config_(std::move(config)) {
    if (config_.window == 0) throw EnvError("window must be positive");
    if (config_.episode_len == 0) throw EnvError("episode_len must be positive");
    if (config_.scenario == Scenario::sc) {
        if (config_.sc_pair.empty())
            throw EnvError("sc scenario needs a configured pair");
        registry_->at(config_.sc_pair); // throws on unknown pair
    }
}

const data::CandleSeries& TradingEnv::series() const {
    return registry_->at(descriptor_.pair).train;
}

Observation TradingEnv::reset(Rng& rng) {
    descriptor_.pair = config_.scenario == Scenario::sc ? config_.sc_pair
                                                        : registry_->sample_pair(rng);
    const data::CandleSeries& s = registry_->at(descriptor_.pair).train;
    descriptor_.start =
        data::sample_episode_start(s.size(), config_.episode_len, config_.window, rng);
    return reset_at(descriptor_.pair, descriptor_.start);
}

Observation TradingEnv::reset_at(const std::string& pair, std::size_t start) {
    const data::CandleSeries& s = registry_->at(pair).train;
    auto [lo, hi] = data::episode_start_range(s.size(), config_.episode_len, config_.window);
    if (start < lo || start > hi)
        throw EnvError("episode start " + std::to_string(start) + " outside valid range [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + "] for pair " + pair);
    descriptor_.pair = pair;
    descriptor_.start = start;
    t_ = start;
    steps_taken_ = 0;
    started_ = true;
    history_.assign(config_.window, Action::neutral);
    return observation();
}

Observation TradingEnv::observation() const {
    if (!started_) throw EnvError("observation() before reset()");
    Observation obs;
    obs.window = config_.window;
    obs.feature_rows = features::build_window(series(), t_, config_.window).values;
    obs.action_history = encode_history(history_);
    return obs;
}

StepResult TradingEnv::step(Action action) {
    if (!started_) throw EnvError("step() before reset()");
    if (done()) throw EnvError("step() on a finished episode");

    const data::CandleSeries& s = series();
    const double prev_close = s[t_].close;
    const double next_close = s[t_ + 1].close;
    const double z = (next_close - prev_close) / prev_close;

    history_.erase(history_.begin());
    history_.push_back(action);
    ++t_;
    ++steps_taken_;

    StepResult result;
    result.price_change = z;
    result.reward = direction(action) * z;
    result.done = done();
    result.observation = observation();
    return result;
}

}
