#include "fxrl/backtester.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fxrl/timeparse.hpp"
#include "json.hpp"

namespace fxrl::bt {

namespace {

using ordered_json = nlohmann::ordered_json;

std::size_t greedy_argmax(const std::vector<double>& probs) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j)
        if (probs[j] > probs[best]) best = j;
    return best;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<env::Action> rollout_policy(const TensorMap& params,
                                        const nn::NetworkConfig& net,
                                        const data::CandleSeries& series,
                                        std::size_t window) {
    if (window == 0) throw BacktestError("rollout_policy: window must be positive");
    if (series.size() < window + 2)
        throw BacktestError("rollout_policy: series of " + std::to_string(series.size()) +
                            " candles is too short for window " + std::to_string(window));

    std::vector<env::Action> actions;
    actions.reserve(series.size() - window - 1);
    std::vector<env::Action> history(window, env::Action::neutral);

    env::Observation obs;
    obs.window = window;
    // decisions run while a next candle exists to settle the position
    for (std::size_t t = window; t + 1 < series.size(); ++t) {
        obs.feature_rows = features::build_window(series, t, window).values;
        obs.action_history = env::encode_history(history);
        const nn::PolicyOutput policy = nn::forward_actor(params, net, obs);
        const env::Action a = static_cast<env::Action>(greedy_argmax(policy.probs));
        actions.push_back(a);
        history.erase(history.begin());
        history.push_back(a);
    }
    return actions;
}

std::vector<Trade> aggregate_trades(const std::vector<env::Action>& actions,
                                    const data::CandleSeries& series,
                                    std::size_t window) {
    if (window + actions.size() + 1 > series.size())
        throw BacktestError("aggregate_trades: actions overrun the series");

    std::vector<Trade> trades;
    std::size_t k = 0;
    while (k < actions.size()) {
        if (actions[k] == env::Action::neutral) {
            ++k;
            continue;
        }
        const env::Action side = actions[k];
        std::size_t run_end = k;
        while (run_end + 1 < actions.size() && actions[run_end + 1] == side) ++run_end;

        Trade tr;
        tr.side = side;
        tr.entry_index = window + k;
        tr.exit_index = window + run_end + 1;
        tr.entry_price = series[tr.entry_index].close;
        tr.exit_price = series[tr.exit_index].close;
        tr.pnl_ratio =
            env::direction(side) * (tr.exit_price - tr.entry_price) / tr.entry_price;
        trades.push_back(tr);
        k = run_end + 1;
    }
    return trades;
}

std::vector<EquityPoint> compute_equity(const std::vector<env::Action>& actions,
                                        const data::CandleSeries& series,
                                        std::size_t window, double initial_equity) {
    if (window + actions.size() + 1 > series.size())
        throw BacktestError("compute_equity: actions overrun the series");

    std::vector<EquityPoint> curve;
    curve.reserve(actions.size() + 1);
    curve.push_back({series[window].time, initial_equity});
    double equity = initial_equity;
    for (std::size_t k = 0; k < actions.size(); ++k) {
        const std::size_t t = window + k;
        const double z = (series[t + 1].close - series[t].close) / series[t].close;
        equity *= 1.0 + env::direction(actions[k]) * z;
        curve.push_back({series[t + 1].time, equity});
    }
    return curve;
}

std::vector<DrawdownEpisode> drawdown_episodes(const std::vector<EquityPoint>& curve) {
    std::vector<DrawdownEpisode> episodes;
    if (curve.empty()) return episodes;

    double peak = curve[0].equity;
    std::int64_t peak_time = curve[0].time;
    bool below = false;
    double trough = peak;

    for (std::size_t i = 1; i < curve.size(); ++i) {
        const EquityPoint& p = curve[i];
        if (p.equity >= peak) {
            if (below) {
                episodes.push_back({(trough - peak) / peak * 100.0, p.time - peak_time});
                below = false;
            }
            peak = p.equity;
            peak_time = p.time;
        } else {
            if (!below) {
                below = true;
                trough = p.equity;
            } else {
                trough = std::min(trough, p.equity);
            }
        }
    }
    if (below)
        episodes.push_back(
            {(trough - peak) / peak * 100.0, curve.back().time - peak_time});
    return episodes;
}

BacktestReport compute_report(const std::string& pair,
                              const std::vector<Trade>& trades,
                              const std::vector<EquityPoint>& curve,
                              double initial_equity) {
    if (curve.empty()) throw BacktestError("compute_report: empty equity curve");

    BacktestReport r;
    r.pair = pair;
    r.decisions = curve.size() - 1;
    r.initial_equity = initial_equity;
    r.final_equity = curve.back().equity;
    r.return_pct = (r.final_equity - r.initial_equity) / r.initial_equity * 100.0;
    r.trades = trades;
    r.trade_count = trades.size();

    double gross_win = 0.0, gross_loss = 0.0;
    for (const Trade& t : trades) {
        if (t.pnl_ratio > 0.0) {
            ++r.wins;
            gross_win += t.pnl_ratio;
        } else if (t.pnl_ratio < 0.0) {
            ++r.losses;
            gross_loss += -t.pnl_ratio;
        }
    }
    if (r.trade_count > 0) {
        r.win_rate_pct = 100.0 * static_cast<double>(r.wins) /
                         static_cast<double>(r.trade_count);
        if (gross_loss > 0.0)
            r.profit_factor = gross_win / gross_loss;
        else if (gross_win > 0.0)
            r.profit_factor = std::numeric_limits<double>::infinity();
        // no wins and no losses leaves profit_factor undefined
    }
    if (r.trade_count >= 2) {
        double mean = 0.0;
        for (const Trade& t : trades) mean += t.pnl_ratio;
        mean /= static_cast<double>(r.trade_count);
        double ss = 0.0;
        for (const Trade& t : trades) {
            const double d = t.pnl_ratio - mean;
            ss += d * d;
        }
        const double sample_std =
            std::sqrt(ss / static_cast<double>(r.trade_count - 1));
        if (sample_std > 0.0) r.sharpe = mean / sample_std;
    }

    const std::vector<DrawdownEpisode> dds = drawdown_episodes(curve);
    if (!dds.empty()) {
        double depth_sum = 0.0, dur_sum = 0.0;
        for (const DrawdownEpisode& d : dds) {
            r.max_drawdown_pct = std::min(r.max_drawdown_pct, d.depth_pct);
            r.max_drawdown_duration_sec =
                std::max(r.max_drawdown_duration_sec, d.duration_sec);
            depth_sum += d.depth_pct;
            dur_sum += static_cast<double>(d.duration_sec);
        }
        r.avg_drawdown_pct = depth_sum / static_cast<double>(dds.size());
        r.avg_drawdown_duration_sec = dur_sum / static_cast<double>(dds.size());
    }
    return r;
}

BacktestRun run_backtest(const TensorMap& params, const nn::NetworkConfig& net,
                         const data::CandleSeries& series, double initial_equity) {
    BacktestRun run;
    run.actions = rollout_policy(params, net, series, net.window);
    const std::vector<Trade> trades = aggregate_trades(run.actions, series, net.window);
    run.equity = compute_equity(run.actions, series, net.window, initial_equity);
    run.report = compute_report(series.pair, trades, run.equity, initial_equity);
    run.report.candles = series.size();
    return run;
}

std::string report_to_json(const BacktestReport& r) {
    ordered_json j;
    j["pair"] = r.pair;
    j["candles"] = r.candles;
    j["decisions"] = r.decisions;
    j["initial_equity"] = r.initial_equity;
    j["final_equity"] = r.final_equity;
    j["return_pct"] = r.return_pct;
    j["trade_count"] = r.trade_count;
    j["wins"] = r.wins;
    j["losses"] = r.losses;
    j["win_rate_pct"] = r.win_rate_pct ? ordered_json(*r.win_rate_pct) : ordered_json(nullptr);
    if (!r.profit_factor)
        j["profit_factor"] = nullptr;
    else if (std::isinf(*r.profit_factor))
        j["profit_factor"] = "inf";
    else
        j["profit_factor"] = *r.profit_factor;
    j["sharpe"] = r.sharpe ? ordered_json(*r.sharpe) : ordered_json(nullptr);
    j["max_drawdown_pct"] = r.max_drawdown_pct;
    j["avg_drawdown_pct"] = r.avg_drawdown_pct;
    j["max_drawdown_duration_sec"] = r.max_drawdown_duration_sec;
    j["avg_drawdown_duration_sec"] = r.avg_drawdown_duration_sec;
    j["trades"] = ordered_json::array();
    for (const Trade& t : r.trades) {
        ordered_json jt;
        jt["side"] = env::to_string(t.side);
        jt["entry_index"] = t.entry_index;
        jt["exit_index"] = t.exit_index;
        jt["entry_price"] = t.entry_price;
        jt["exit_price"] = t.exit_price;
        jt["pnl_ratio"] = t.pnl_ratio;
        j["trades"].push_back(std::move(jt));
    }
    return j.dump(2) + "\n";
}

BacktestReport report_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw BacktestError(std::string("report parse failure: ") + e.what());
    }
    BacktestReport r;
    r.pair = j.at("pair").get<std::string>();
    r.candles = j.at("candles").get<std::size_t>();
    r.decisions = j.at("decisions").get<std::size_t>();
    r.initial_equity = j.at("initial_equity").get<double>();
    r.final_equity = j.at("final_equity").get<double>();
    r.return_pct = j.at("return_pct").get<double>();
    r.trade_count = j.at("trade_count").get<std::size_t>();
    r.wins = j.at("wins").get<std::size_t>();
    r.losses = j.at("losses").get<std::size_t>();
    if (!j.at("win_rate_pct").is_null()) r.win_rate_pct = j["win_rate_pct"].get<double>();
    const auto& pf = j.at("profit_factor");
    if (pf.is_string()) {
        if (pf.get<std::string>() != "inf")
            throw BacktestError("report: bad profit_factor sentinel");
        r.profit_factor = std::numeric_limits<double>::infinity();
    } else if (!pf.is_null()) {
        r.profit_factor = pf.get<double>();
    }
    if (!j.at("sharpe").is_null()) r.sharpe = j["sharpe"].get<double>();
    r.max_drawdown_pct = j.at("max_drawdown_pct").get<double>();
    r.avg_drawdown_pct = j.at("avg_drawdown_pct").get<double>();
    r.max_drawdown_duration_sec = j.at("max_drawdown_duration_sec").get<std::int64_t>();
    r.avg_drawdown_duration_sec = j.at("avg_drawdown_duration_sec").get<double>();
    for (const auto& jt : j.at("trades")) {
        Trade t;
        t.side = env::action_from_string(jt.at("side").get<std::string>());
        t.entry_index = jt.at("entry_index").get<std::size_t>();
        t.exit_index = jt.at("exit_index").get<std::size_t>();
        t.entry_price = jt.at("entry_price").get<double>();
        t.exit_price = jt.at("exit_price").get<double>();
        t.pnl_ratio = jt.at("pnl_ratio").get<double>();
        r.trades.push_back(t);
    }
    return r;
}

std::string report_to_csv(const BacktestReport& r) {
    std::ostringstream out;
    auto opt = [](const std::optional<double>& v) -> std::string {
        if (!v) return "null";
        if (std::isinf(*v)) return "inf";
        return format_double(*v);
    };
    out << "pair," << r.pair << "\n";
    out << "candles," << r.candles << "\n";
    out << "decisions," << r.decisions << "\n";
    out << "initial_equity," << format_double(r.initial_equity) << "\n";
    out << "final_equity," << format_double(r.final_equity) << "\n";
    out << "return_pct," << format_double(r.return_pct) << "\n";
    out << "trade_count," << r.trade_count << "\n";
    out << "wins," << r.wins << "\n";
    out << "losses," << r.losses << "\n";
    out << "win_rate_pct," << opt(r.win_rate_pct) << "\n";
    out << "profit_factor," << opt(r.profit_factor) << "\n";
    out << "sharpe," << opt(r.sharpe) << "\n";
    out << "max_drawdown_pct," << format_double(r.max_drawdown_pct) << "\n";
    out << "avg_drawdown_pct," << format_double(r.avg_drawdown_pct) << "\n";
    out << "max_drawdown_duration_sec," << r.max_drawdown_duration_sec << "\n";
    out << "avg_drawdown_duration_sec," << format_double(r.avg_drawdown_duration_sec)
        << "\n";
    for (std::size_t i = 0; i < r.trades.size(); ++i) {
        const Trade& t = r.trades[i];
        out << "trade," << i << "," << env::to_string(t.side) << "," << t.entry_index
            << "," << t.exit_index << "," << format_double(t.entry_price) << ","
            << format_double(t.exit_price) << "," << format_double(t.pnl_ratio) << "\n";
    }
    return out.str();
}

BacktestReport report_from_csv(const std::string& csv_text) {
    BacktestReport r;
    std::istringstream in(csv_text);
    std::string line;
    auto need_double = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
    auto opt_double = [&](const std::string& s) -> std::optional<double> {
        if (s == "null") return std::nullopt;
        if (s == "inf") return std::numeric_limits<double>::infinity();
        return need_double(s);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() < 2) throw BacktestError("report csv: bad line '" + line + "'");
        const std::string& key = f[0];
        if (key == "pair") r.pair = f[1];
        else if (key == "candles") r.candles = std::stoul(f[1]);
        else if (key == "decisions") r.decisions = std::stoul(f[1]);
        else if (key == "initial_equity") r.initial_equity = need_double(f[1]);
        else if (key == "final_equity") r.final_equity = need_double(f[1]);
        else if (key == "return_pct") r.return_pct = need_double(f[1]);
        else if (key == "trade_count") r.trade_count = std::stoul(f[1]);
        else if (key == "wins") r.wins = std::stoul(f[1]);
        else if (key == "losses") r.losses = std::stoul(f[1]);
        else if (key == "win_rate_pct") r.win_rate_pct = opt_double(f[1]);
        else if (key == "profit_factor") r.profit_factor = opt_double(f[1]);
        else if (key == "sharpe") r.sharpe = opt_double(f[1]);
        else if (key == "max_drawdown_pct") r.max_drawdown_pct = need_double(f[1]);
        else if (key == "avg_drawdown_pct") r.avg_drawdown_pct = need_double(f[1]);
        else if (key == "max_drawdown_duration_sec") r.max_drawdown_duration_sec = std::stoll(f[1]);
        else if (key == "avg_drawdown_duration_sec") r.avg_drawdown_duration_sec = need_double(f[1]);
        else if (key == "trade") {
            if (f.size() != 8) throw BacktestError("report csv: bad trade line");
            Trade t;
            t.side = env::action_from_string(f[2]);
            t.entry_index = std::stoul(f[3]);
            t.exit_index = std::stoul(f[4]);
            t.entry_price = need_double(f[5]);
            t.exit_price = need_double(f[6]);
            t.pnl_ratio = need_double(f[7]);
            r.trades.push_back(t);
        } else {
            throw BacktestError("report csv: unknown key '" + key + "'");
        }
    }
    return r;
}

std::string report_to_text(const BacktestReport& r) {
    std::ostringstream out;
    char buf[128];
    auto line = [&](const char* label, const std::string& value) {
        std::snprintf(buf, sizeof(buf), "  %-22s %s\n", label, value.c_str());
        out << buf;
    };
    auto num = [&](double v, int prec) {
        char b[64];
        std::snprintf(b, sizeof(b), "%.*f", prec, v);
        return std::string(b);
    };
    auto opt = [&](const std::optional<double>& v, int prec) -> std::string {
        if (!v) return "n/a";
        if (std::isinf(*v)) return "inf";
        return num(*v, prec);
    };
    out << r.pair << " backtest (" << r.candles << " candles, " << r.decisions
        << " decisions)\n";
    line("Return [%]", num(r.return_pct, 2));
    line("Sharpe", opt(r.sharpe, 4));
    line("Win rate [%]", opt(r.win_rate_pct, 2));
    line("Profit factor", opt(r.profit_factor, 4));
    line("Trades", std::to_string(r.trade_count) + " (" + std::to_string(r.wins) +
                       " wins, " + std::to_string(r.losses) + " losses)");
    line("Max drawdown [%]", num(r.max_drawdown_pct, 2));
    line("Avg drawdown [%]", num(r.avg_drawdown_pct, 2));
    line("Max drawdown time", format_duration(r.max_drawdown_duration_sec));
    line("Avg drawdown time",
         format_duration(static_cast<std::int64_t>(r.avg_drawdown_duration_sec)));
    line("Final equity", num(r.final_equity, 2) + " (from " + num(r.initial_equity, 2) + ")");
    return out.str();
}

std::string equity_to_csv(const std::vector<EquityPoint>& curve) {
    std::ostringstream out;
    out << "time,equity\n";
    for (const EquityPoint& p : curve)
        out << format_iso8601_utc(p.time) << "," << format_double(p.equity) << "\n";
    return out.str();
}

}
