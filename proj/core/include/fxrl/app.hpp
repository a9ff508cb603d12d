#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fxrl/a3c.hpp"
#include "fxrl/backtester.hpp"
#include "fxrl/kvconfig.hpp"
#include "fxrl/rl.hpp"

namespace fxrl::app {

// Process exit codes, one family per failure class.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,      // unexpected errors
    kConfigError = 2,  // bad config keys/values, shape mismatches
    kDataError = 3,    // unreadable or invalid market data
    kNumericError = 4, // non-finite training or inference numbers
};

// Everything a training run needs, merged from a key-value config file and
// command-line overrides (flags win). Unknown keys are rejected with a
// nearest-match suggestion.
struct RunConfig {
    std::string registry_path;
    std::string mode; // "ppo" | "a3c-lock" | "a3c-nolock"
    std::string out_dir;
    env::EnvConfig env;
    nn::NetworkConfig net;
    rl::TrainConfig train;
    config::KeyValues merged; // canonical post-override key/values
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

// config_path may be empty when every required key arrives as an override.
RunConfig parse_run_config(const std::string& config_path, const Overrides& overrides);

struct BacktestArgs {
    std::string checkpoint_path;
    std::string registry_path; // exactly one of registry_path / data_csv
    std::string data_csv;
    std::vector<std::string> pairs; // empty: all registry pairs
    double initial_equity = 10000.0;
    std::size_t window_override = 0; // 0: take the checkpoint's window
    std::string out_dir;             // empty: print only
};

// Command bodies behind the CLI. They write human output to `out`,
// diagnostics to `err`, and return an ExitCode instead of throwing.
int run_inspect(const std::string& csv_path, std::ostream& out, std::ostream& err);
int run_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_backtest(const BacktestArgs& args, std::ostream& out, std::ostream& err);
int run_report(const std::string& report_path, const std::string& format,
               std::ostream& out, std::ostream& err);

}
