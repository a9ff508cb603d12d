#include "fxrl/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "fxrl/checkpoint.hpp"
#include "fxrl/timeparse.hpp"
#include "fxrl/version.hpp"
#include "json.hpp"

namespace fxrl::app {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using config::ConfigError;

const std::vector<std::string> kKnownKeys = {
    "registry",   "mode",        "scenario",     "sc_pair",        "out_dir",
    "seed",       "total_steps", "episode_len",  "window",         "hidden",
    "gamma",      "learning_rate", "n_steps",    "workers",        "entropy_coef",
    "clip_epsilon", "ppo_epochs", "value_loss_coef", "grad_clip",
};

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                               diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

void reject_unknown_key(const std::string& key) {
    std::string best;
    std::size_t best_dist = 4; // only suggest close matches
    for (const std::string& known : kKnownKeys) {
        const std::size_t d = edit_distance(key, known);
        if (d < best_dist) {
            best_dist = d;
            best = known;
        }
    }
    std::string msg = "unknown config key '" + key + "'";
    if (!best.empty()) msg += ", did you mean '" + best + "'?";
    throw ConfigError(msg);
}

double parse_double_value(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || !std::isfinite(v))
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    return v;
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end != value.c_str() + value.size() || value.empty() || value[0] == '-')
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    return v;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

ordered_json manifest_json(const RunConfig& cfg, const data::DatasetRegistry& registry,
                           std::uint64_t updates, std::uint64_t env_steps,
                           double wall_sec) {
    ordered_json m;
    m["version"] = kVersion;
    m["config_hash"] = config::hash_hex(cfg.merged);
    m["mode"] = cfg.mode;
    m["scenario"] = cfg.env.scenario == env::Scenario::sc ? "sc" : "mc";
    if (cfg.env.scenario == env::Scenario::sc) m["sc_pair"] = cfg.env.sc_pair;
    m["seed"] = cfg.train.seed;
    ordered_json seeds = ordered_json::array();
    if (cfg.mode == "ppo") {
        seeds.push_back(cfg.train.seed);
    } else {
        for (std::size_t w = 0; w < cfg.train.workers; ++w)
            seeds.push_back(cfg.train.seed + w);
    }
    m["worker_seeds"] = seeds;
    m["workers"] = cfg.mode == "ppo" ? 1 : cfg.train.workers;
    m["total_steps"] = cfg.train.total_steps;
    m["n_steps"] = cfg.train.n_steps;
    m["episode_len"] = cfg.env.episode_len;
    m["window"] = cfg.net.window;
    m["hidden"] = cfg.net.hidden;
    m["gamma"] = cfg.train.gamma;
    m["learning_rate"] = cfg.train.learning_rate;
    m["entropy_coef"] = cfg.train.entropy_coef;
    m["clip_epsilon"] = cfg.train.clip_epsilon;
    m["ppo_epochs"] = cfg.train.ppo_epochs;
    m["value_loss_coef"] = cfg.train.value_loss_coef;
    m["grad_clip"] = cfg.train.grad_clip;
    m["registry"] = cfg.registry_path;
    m["split_boundary"] = format_iso8601_utc(registry.split_boundary());
    m["pairs"] = registry.pair_names();
    m["updates"] = updates;
    m["env_steps"] = env_steps;
    m["wall_time_sec"] = wall_sec;
    return m;
}

std::string ppo_log_lines(const std::vector<rl::EpisodeRecord>& log) {
    std::string out;
    for (const rl::EpisodeRecord& r : log) {
        ordered_json j;
        j["algo"] = "ppo";
        j["episode"] = r.episode;
        j["pair"] = r.pair;
        j["start"] = r.start;
        j["seed"] = r.seed;
        j["steps"] = r.steps;
        j["reward_sum"] = r.reward_sum;
        j["wall_ms"] = r.wall_ms;
        out += j.dump() + "\n";
    }
    return out;
}

std::string a3c_log_lines(const std::vector<a3c::UpdateRecord>& log) {
    std::string out;
    for (const a3c::UpdateRecord& r : log) {
        ordered_json j;
        j["algo"] = "a3c";
        j["worker"] = r.worker;
        j["update"] = r.update;
        j["pair"] = r.pair;
        j["start"] = r.start;
        j["seed"] = r.seed;
        j["steps"] = r.steps;
        j["segment_reward"] = r.segment_reward;
        j["grad_norm"] = r.grad_norm;
        j["wall_ms"] = r.wall_ms;
        j["skipped"] = r.skipped;
        out += j.dump() + "\n";
    }
    return out;
}

// Maps thrown errors onto the exit-code families; shared by all commands.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const nn::NetworkError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const env::EnvError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const data::DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const nn::CheckpointError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const bt::BacktestError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const nn::NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

} // namespace

RunConfig parse_run_config(const std::string& config_path, const Overrides& overrides) {
    config::KeyValues kv;
    if (!config_path.empty()) kv = config::parse_kv_file(config_path);
    for (const auto& [key, value] : overrides) {
        bool replaced = false;
        for (auto& [k, v] : kv.entries) {
            if (k == key) {
                v = value;
                replaced = true;
                break;
            }
        }
        if (!replaced) kv.entries.emplace_back(key, value);
    }

    RunConfig cfg;
    cfg.merged = kv;
    std::string scenario = "sc";
    for (const auto& [key, value] : kv.entries) {
        if (key == "registry") cfg.registry_path = value;
        else if (key == "mode") cfg.mode = value;
        else if (key == "scenario") scenario = value;
        else if (key == "sc_pair") cfg.env.sc_pair = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "seed") cfg.train.seed = parse_u64_value(key, value);
        else if (key == "total_steps") cfg.train.total_steps = parse_u64_value(key, value);
        else if (key == "episode_len") cfg.env.episode_len = parse_u64_value(key, value);
        else if (key == "window") cfg.env.window = parse_u64_value(key, value);
        else if (key == "hidden") cfg.net.hidden = parse_u64_value(key, value);
        else if (key == "gamma") cfg.train.gamma = parse_double_value(key, value);
        else if (key == "learning_rate") cfg.train.learning_rate = parse_double_value(key, value);
        else if (key == "n_steps") cfg.train.n_steps = parse_u64_value(key, value);
        else if (key == "workers") cfg.train.workers = parse_u64_value(key, value);
        else if (key == "entropy_coef") cfg.train.entropy_coef = parse_double_value(key, value);
        else if (key == "clip_epsilon") cfg.train.clip_epsilon = parse_double_value(key, value);
        else if (key == "ppo_epochs") cfg.train.ppo_epochs = parse_u64_value(key, value);
        else if (key == "value_loss_coef") cfg.train.value_loss_coef = parse_double_value(key, value);
        else if (key == "grad_clip") cfg.train.grad_clip = parse_double_value(key, value);
        else reject_unknown_key(key);
    }
    cfg.net.window = cfg.env.window;

    if (cfg.mode != "ppo" && cfg.mode != "a3c-lock" && cfg.mode != "a3c-nolock")
        throw ConfigError(cfg.mode.empty()
                              ? "mode is required (ppo | a3c-lock | a3c-nolock)"
                              : "bad mode '" + cfg.mode + "' (ppo | a3c-lock | a3c-nolock)");
    if (scenario == "sc") cfg.env.scenario = env::Scenario::sc;
    else if (scenario == "mc") cfg.env.scenario = env::Scenario::mc;
    else throw ConfigError("bad scenario '" + scenario + "' (sc | mc)");
    if (cfg.env.scenario == env::Scenario::sc && cfg.env.sc_pair.empty())
        throw ConfigError("sc scenario requires sc_pair");
    if (cfg.registry_path.empty()) throw ConfigError("registry is required");
    if (cfg.train.n_steps == 0) throw ConfigError("n_steps must be positive");
    if (cfg.train.workers == 0) throw ConfigError("workers must be positive");
    if (cfg.env.window == 0) throw ConfigError("window must be positive");
    if (cfg.env.episode_len == 0) throw ConfigError("episode_len must be positive");
    if (cfg.train.gamma < 0.0 || cfg.train.gamma > 1.0)
        throw ConfigError("gamma must be in [0, 1]");
    return cfg;
}

int run_inspect(const std::string& csv_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> int {
        const std::string pair = fs::path(csv_path).stem().string();
        const data::ScanResult scan = data::scan_candles(csv_path, pair);
        out << "file: " << csv_path << "\n";
        out << "pair: " << pair << "\n";
        out << "rows: " << scan.series.size() << " valid, " << scan.violations.size()
            << " rejected\n";
        if (!scan.series.empty())
            out << "range: " << format_iso8601_utc(scan.series.candles.front().time)
                << " .. " << format_iso8601_utc(scan.series.candles.back().time) << "\n";
        out << "violations: " << scan.violations.size() << "\n";
        for (const data::RowViolation& v : scan.violations)
            out << "  line " << v.line << ": " << v.reason << "\n";
        return kOk;
    });
}

int run_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> int {
        const data::DatasetRegistry registry = data::load_registry(cfg.registry_path);
        if (cfg.env.scenario == env::Scenario::sc) registry.at(cfg.env.sc_pair);

        fs::create_directories(cfg.out_dir.empty() ? "." : cfg.out_dir);
        const fs::path out_dir = cfg.out_dir.empty() ? "." : cfg.out_dir;

        out << "mode " << cfg.mode << ", "
            << (cfg.env.scenario == env::Scenario::sc ? "sc" : "mc") << ", seed "
            << cfg.train.seed << ", total_steps " << cfg.train.total_steps << "\n";

        const auto t0 = std::chrono::steady_clock::now();
        TensorMap params;
        std::string log_lines;
        std::uint64_t updates = 0, env_steps = 0;
        try {
            if (cfg.mode == "ppo") {
                rl::PpoResult r = rl::run_ppo(registry, cfg.env, cfg.net, cfg.train);
                params = std::move(r.params);
                log_lines = ppo_log_lines(r.log);
                updates = r.log.size() * cfg.train.ppo_epochs;
                env_steps = r.env_steps;
            } else {
                const a3c::UpdateMode mode = cfg.mode == "a3c-lock"
                                                 ? a3c::UpdateMode::lock
                                                 : a3c::UpdateMode::nolock;
                a3c::A3cResult r = run_a3c(registry, cfg.env, cfg.net, cfg.train, mode);
                params = std::move(r.params);
                log_lines = a3c_log_lines(r.log);
                updates = r.updates;
                for (const a3c::UpdateRecord& rec : r.log) env_steps += rec.steps;
                if (r.tear_count != 0)
                    throw nn::NumericError("torn element reads detected: " +
                                           std::to_string(r.tear_count));
            }
        } catch (const rl::TrainAbort& abort) {
            const fs::path diag = out_dir / "checkpoint.diagnostic.bin";
            nn::save_checkpoint(diag.string(), abort.params, cfg.net);
            err << "numeric error: " << abort.what() << "\n";
            err << "diagnostic checkpoint: " << diag.string() << "\n";
            return kNumericError;
        }
        const auto t1 = std::chrono::steady_clock::now();
        const double wall_sec = std::chrono::duration<double>(t1 - t0).count();

        nn::save_checkpoint((out_dir / "checkpoint.bin").string(), params, cfg.net);
        write_text_file(out_dir / "log.jsonl", log_lines);
        write_text_file(out_dir / "manifest.json",
                        manifest_json(cfg, registry, updates, env_steps, wall_sec).dump(2) + "\n");

        out << "updates " << updates << ", env steps " << env_steps << ", wall "
            << wall_sec << " s\n";
        out << "wrote " << (out_dir / "checkpoint.bin").string() << "\n";
        return kOk;
    });
}

int run_backtest(const BacktestArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> int {
        if (args.checkpoint_path.empty())
            throw ConfigError("backtest needs a checkpoint path");
        if (args.registry_path.empty() == args.data_csv.empty())
            throw ConfigError("backtest needs exactly one of registry / data csv");

        nn::Checkpoint ckpt = nn::load_checkpoint(args.checkpoint_path);
        nn::NetworkConfig net = ckpt.config;
        if (args.window_override != 0 && args.window_override != net.window) {
            net.window = args.window_override;
            nn::validate_shapes(ckpt.params, net); // throws the shape mismatch
        }

        std::vector<data::CandleSeries> targets;
        if (!args.registry_path.empty()) {
            const data::DatasetRegistry registry = data::load_registry(args.registry_path);
            const std::vector<std::string>& names =
                args.pairs.empty() ? registry.pair_names() : args.pairs;
            for (const std::string& name : names)
                targets.push_back(registry.at(name).test);
        } else {
            const std::string pair =
                args.pairs.empty() ? fs::path(args.data_csv).stem().string()
                                   : args.pairs.front();
            targets.push_back(data::load_candles(args.data_csv, pair));
        }

        if (!args.out_dir.empty()) fs::create_directories(fs::path(args.out_dir) / "reports");

        for (const data::CandleSeries& series : targets) {
            const bt::BacktestRun run =
                bt::run_backtest(ckpt.params, net, series, args.initial_equity);
            out << bt::report_to_text(run.report) << "\n";
            if (!args.out_dir.empty()) {
                const fs::path dir(args.out_dir);
                write_text_file(dir / "reports" / (series.pair + ".json"),
                                bt::report_to_json(run.report));
                write_text_file(dir / "reports" / (series.pair + "_equity.csv"),
                                bt::equity_to_csv(run.equity));
            }
        }
        return kOk;
    });
}

int run_report(const std::string& report_path, const std::string& format,
               std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> int {
        std::ifstream in(report_path);
        if (!in) throw data::DataError("cannot open report: " + report_path);
        std::stringstream buf;
        buf << in.rdbuf();
        const bt::BacktestReport report = bt::report_from_json(buf.str());
        if (format == "text") out << bt::report_to_text(report);
        else if (format == "json") out << bt::report_to_json(report);
        else if (format == "csv") out << bt::report_to_csv(report);
        else throw ConfigError("bad report format '" + format + "' (text | json | csv)");
        return kOk;
    });
}

}
