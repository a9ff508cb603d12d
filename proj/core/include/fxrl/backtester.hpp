#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fxrl/market_data.hpp"
#include "fxrl/network.hpp"
#include "fxrl/trading_env.hpp"

namespace fxrl::bt {

struct BacktestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Greedy policy evaluation over a series: argmax action at every index from
// `window` to size-2, first index winning ties, with the one-hot action
// history maintained exactly as during training.
std::vector<env::Action> rollout_policy(const TensorMap& params,
                                        const nn::NetworkConfig& net,
                                        const data::CandleSeries& series,
                                        std::size_t window);

// A maximal run of identical non-neutral actions, held as one position.
// Entry is the close where the run begins; exit is the close after its last
// decision candle. pnl_ratio = direction * (exit - entry) / entry.
struct Trade {
    env::Action side = env::Action::neutral;
    std::size_t entry_index = 0;
    std::size_t exit_index = 0;
    double entry_price = 0.0;
    double exit_price = 0.0;
    double pnl_ratio = 0.0;
};

// actions[k] is the decision at candle window + k.
std::vector<Trade> aggregate_trades(const std::vector<env::Action>& actions,
                                    const data::CandleSeries& series,
                                    std::size_t window);

struct EquityPoint {
    std::int64_t time = 0;
    double equity = 0.0;
};

// Full-equity compounding: e_{k+1} = e_k * (1 + direction_k * z_{k+1}),
// starting from initial_equity at the first decision candle.
std::vector<EquityPoint> compute_equity(const std::vector<env::Action>& actions,
                                        const data::CandleSeries& series,
                                        std::size_t window, double initial_equity);

// One peak-to-recovery excursion of the equity curve. An unrecovered final
// excursion is included with its partial depth and duration.
struct DrawdownEpisode {
    double depth_pct = 0.0;            // (trough - peak) / peak * 100, <= 0
    std::int64_t duration_sec = 0;     // peak time to recovery (or curve end)
};

std::vector<DrawdownEpisode> drawdown_episodes(const std::vector<EquityPoint>& curve);

// Metrics over one pair's test partition. Undefined metrics (too few
// trades, zero-variance pnl) stay unset; profit_factor may be +infinity
// when nothing was lost.
struct BacktestReport {
    std::string pair;
    std::size_t candles = 0;
    std::size_t decisions = 0;
    double initial_equity = 0.0;
    double final_equity = 0.0;
    double return_pct = 0.0;
    std::size_t trade_count = 0;
    std::size_t wins = 0;
    std::size_t losses = 0;
    std::optional<double> win_rate_pct;
    std::optional<double> profit_factor;
    std::optional<double> sharpe;
    double max_drawdown_pct = 0.0;
    double avg_drawdown_pct = 0.0;
    std::int64_t max_drawdown_duration_sec = 0;
    double avg_drawdown_duration_sec = 0.0;
    std::vector<Trade> trades;
};

BacktestReport compute_report(const std::string& pair,
                              const std::vector<Trade>& trades,
                              const std::vector<EquityPoint>& curve,
                              double initial_equity);

struct BacktestRun {
    BacktestReport report;
    std::vector<env::Action> actions;
    std::vector<EquityPoint> equity;
};

// rollout + aggregation + equity + metrics in one call.
BacktestRun run_backtest(const TensorMap& params, const nn::NetworkConfig& net,
                         const data::CandleSeries& series, double initial_equity);

// Serialization. JSON output is canonical: fixed field order, shortest
// round-trip doubles, so identical reports are identical bytes. Undefined
// metrics serialize as null, infinite profit factor as the string "inf".
std::string report_to_json(const BacktestReport& report);
BacktestReport report_from_json(const std::string& json_text);
std::string report_to_csv(const BacktestReport& report);
BacktestReport report_from_csv(const std::string& csv_text);
std::string report_to_text(const BacktestReport& report);
std::string equity_to_csv(const std::vector<EquityPoint>& curve);

}
