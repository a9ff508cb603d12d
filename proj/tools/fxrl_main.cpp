#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fxrl/app.hpp"
#include "fxrl/version.hpp"

namespace {

// Flags mirror config keys one to one; a flag the user passed becomes an
// override that beats the file value.
struct TrainFlags {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_override_option(CLI::App* cmd, TrainFlags& flags, const std::string& flag,
                         const std::string& key, const std::string& help) {
    auto holder = std::make_shared<std::string>();
    cmd->add_option_function<std::string>(
           flag,
           [&flags, key](const std::string& value) {
               flags.overrides.emplace_back(key, value);
           },
           help)
        ->type_name("VALUE");
    (void)holder;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"forex trading agents: data inspection, training, backtesting"};
    cli.set_version_flag("--version", std::string(fxrl::kVersion));
    cli.require_subcommand(1);

    // inspect
    std::string inspect_path;
    CLI::App* inspect = cli.add_subcommand("inspect", "validate a candle csv file");
    inspect->add_option("csv", inspect_path, "candle csv path")->required();

    // train
    TrainFlags train_flags;
    CLI::App* train = cli.add_subcommand("train", "train an agent");
    train->add_option("--config", train_flags.config_path, "key-value run config file");
    add_override_option(train, train_flags, "--registry", "registry", "registry config path");
    add_override_option(train, train_flags, "--mode", "mode", "ppo | a3c-lock | a3c-nolock");
    add_override_option(train, train_flags, "--scenario", "scenario", "sc | mc");
    add_override_option(train, train_flags, "--pair", "sc_pair", "pair for the sc scenario");
    add_override_option(train, train_flags, "--out", "out_dir", "run output directory");
    add_override_option(train, train_flags, "--seed", "seed", "base rng seed");
    add_override_option(train, train_flags, "--steps", "total_steps", "environment step budget");
    add_override_option(train, train_flags, "--episode-len", "episode_len", "steps per episode");
    add_override_option(train, train_flags, "--window", "window", "lookback window");
    add_override_option(train, train_flags, "--hidden", "hidden", "lstm hidden width");
    add_override_option(train, train_flags, "--gamma", "gamma", "discount factor");
    add_override_option(train, train_flags, "--lr", "learning_rate", "adam learning rate");
    add_override_option(train, train_flags, "--n-steps", "n_steps", "worker steps per update");
    add_override_option(train, train_flags, "--workers", "workers", "worker thread count");
    add_override_option(train, train_flags, "--entropy-coef", "entropy_coef", "entropy bonus weight");
    add_override_option(train, train_flags, "--clip-epsilon", "clip_epsilon", "ppo ratio clip");
    add_override_option(train, train_flags, "--ppo-epochs", "ppo_epochs", "ppo passes per rollout");
    add_override_option(train, train_flags, "--value-loss-coef", "value_loss_coef", "critic loss weight");
    add_override_option(train, train_flags, "--grad-clip", "grad_clip", "global gradient norm bound");

    // backtest
    fxrl::app::BacktestArgs bt_args;
    std::size_t bt_window = 0;
    CLI::App* backtest = cli.add_subcommand("backtest", "evaluate a checkpoint greedily");
    backtest->add_option("--checkpoint", bt_args.checkpoint_path, "checkpoint file")->required();
    backtest->add_option("--registry", bt_args.registry_path, "registry config (test partitions)");
    backtest->add_option("--data", bt_args.data_csv, "single csv to run on whole");
    backtest->add_option("--pair", bt_args.pairs, "pair filter (repeatable)");
    backtest->add_option("--equity", bt_args.initial_equity, "starting equity");
    backtest->add_option("--window", bt_window, "override lookback window");
    backtest->add_option("--out", bt_args.out_dir, "directory for report files");

    // report
    std::string report_path, report_format = "text";
    CLI::App* report = cli.add_subcommand("report", "re-render a report json");
    report->add_option("json", report_path, "report json path")->required();
    report->add_option("--format", report_format, "text | json | csv");

    CLI11_PARSE(cli, argc, argv);

    if (inspect->parsed())
        return fxrl::app::run_inspect(inspect_path, std::cout, std::cerr);

    if (train->parsed()) {
        try {
            const fxrl::app::RunConfig cfg =
                fxrl::app::parse_run_config(train_flags.config_path, train_flags.overrides);
            return fxrl::app::run_train(cfg, std::cout, std::cerr);
        } catch (const fxrl::config::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return fxrl::app::kConfigError;
        }
    }

    if (backtest->parsed()) {
        bt_args.window_override = bt_window;
        return fxrl::app::run_backtest(bt_args, std::cout, std::cerr);
    }

    if (report->parsed())
        return fxrl::app::run_report(report_path, report_format, std::cout, std::cerr);

    return fxrl::app::kFailure;
}
