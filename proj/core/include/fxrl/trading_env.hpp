#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fxrl/features.hpp"
#include "fxrl/market_data.hpp"
#include "fxrl/rng.hpp"

namespace fxrl::env {

struct EnvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kNumActions = 3;

enum class Action : int { long_side = 0, short_side = 1, neutral = 2 };

// Position direction the action takes over the next candle: +1, -1 or 0.
constexpr double direction(Action a) {
    switch (a) {
        case Action::long_side: return 1.0;
        case Action::short_side: return -1.0;
        default: return 0.0;
    }
}

const char* to_string(Action a);
Action action_from_string(const std::string& s);

// What the agent sees at one decision point: a lookback window of candle
// features plus the same number of past actions, one-hot encoded, oldest
// first. Both vectors are flat row-major.
struct Observation {
    std::size_t window = 0;
    std::vector<double> feature_rows;   // window * 5
    std::vector<double> action_history; // window * 3
};

enum class Scenario { sc, mc };

struct EnvConfig {
    std::size_t window = 16;
    std::size_t episode_len = 600;
    Scenario scenario = Scenario::sc;
    std::string sc_pair; // required when scenario == sc
};

// Enough to replay an episode exactly: same pair, same start, and the seed
// of the rng stream that produced it (stamped by the caller).
struct EpisodeDescriptor {
    std::string pair;
    std::size_t start = 0;
    std::uint64_t seed = 0;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    double price_change = 0.0; // relative close-to-close move the reward is based on
    bool done = false;
};

// Episode-based trading environment over the train partitions of a
// registry. Reward for an action is direction * next relative close move;
// there is no commission or spread. Stepping is index based, so calendar
// gaps between candles carry no special meaning.
class TradingEnv {
public:
    TradingEnv(const data::DatasetRegistry& registry, EnvConfig config);

    // Samples a pair (mc) or takes the configured one (sc), then a uniform
    // episode start. Action history starts all neutral.
    Observation reset(Rng& rng);

    // Deterministic replay entry for a known descriptor.
    Observation reset_at(const std::string& pair, std::size_t start);

    StepResult step(Action action);

    bool done() const { return steps_taken_ >= config_.episode_len; }
    std::size_t steps_taken() const { return steps_taken_; }
    const EpisodeDescriptor& descriptor() const { return descriptor_; }
    const EnvConfig& config() const { return config_; }

    // Observation at the current index; identical to the last one returned.
    Observation observation() const;

private:
    const data::CandleSeries& series() const;

    const data::DatasetRegistry* registry_;
    EnvConfig config_;
    EpisodeDescriptor descriptor_;
    std::size_t t_ = 0;           // current candle index within the pair's train series
    std::size_t steps_taken_ = 0;
    bool started_ = false;
    std::vector<Action> history_; // last `window` actions, oldest first
};

// One-hot encode a slice of past actions into a flat window*3 vector.
std::vector<double> encode_history(const std::vector<Action>& history);

}
