#include "batval/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "batval/config.hpp"
#include "batval/io.hpp"

namespace batval {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Options {
    std::string prices;
    std::string signal;
    std::string reg_prices;
    std::string synth;
    std::string config;
    std::string out;
    std::string mode;
    std::optional<std::size_t> threads;
};

struct Inputs {
    MarketData market;
    json manifest_inputs = json::array();
};

std::uint64_t parse_synth(const std::string& spec) {
    const std::string prefix = "seed=";
    if (spec.rfind(prefix, 0) != 0 || spec.size() == prefix.size()) {
        throw InputError("--synth expects seed=<integer>, got '" + spec + "'");
    }
    const std::string digits = spec.substr(prefix.size());
    if (digits.find_first_not_of("0123456789") != std::string::npos) {
        throw InputError("--synth expects seed=<integer>, got '" + spec + "'");
    }
    return std::stoull(digits);
}

Config load_run_config(const Options& opt) {
    Config config = opt.config.empty() ? Config{} : load_config(opt.config);
    if (opt.threads) config.run.threads = *opt.threads;
    if (!opt.synth.empty()) config.run.seed = parse_synth(opt.synth);
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return config;
}

json file_entry(const std::string& path) {
    return json{{"path", path}, {"sha256", sha256_file(path)}};
}

Inputs prepare_inputs(const Options& opt, const Config& config, StageMode mode) {
    Inputs in;
    const std::size_t N = config.run.horizon_days;
    const bool synthetic = !opt.synth.empty();
    if (mode == StageMode::Arbitrage) {
        if (synthetic == !opt.prices.empty()) throw InputError("give exactly one of --prices or --synth");
        if (synthetic) {
            const auto& m = config.market;
            in.market.arbitrage = to_market(synth_prices(config.run.seed, N, m.base_price, m.amplitude, m.noise_sd));
            in.manifest_inputs.push_back(json{{"synthetic", "prices"}, {"seed", config.run.seed}, {"days", N}});
        } else {
            in.market.arbitrage = to_market(load_price_csv(opt.prices));
            in.manifest_inputs.push_back(file_entry(opt.prices));
        }
        if (in.market.arbitrage.daily_prices.size() < N) {
            throw InputError(fmt::format("price data covers {} days, horizon is {}",
                                         in.market.arbitrage.daily_prices.size(), N));
        }
        return in;
    }
    const bool files = !opt.signal.empty() || !opt.reg_prices.empty();
    if (synthetic == files) throw InputError("give either --signal and --reg-prices, or --synth");
    SignalSeries signal;
    HourlySeries prices;
    if (synthetic) {
        signal = synth_signal(config.run.seed, N);
        prices = synth_regulation_prices(config.run.seed, N, config.market.regulation_base);
        in.manifest_inputs.push_back(json{{"synthetic", "signal"}, {"seed", config.run.seed}, {"days", N}});
        in.manifest_inputs.push_back(json{{"synthetic", "regulation_prices"}, {"seed", config.run.seed}, {"days", N}});
    } else {
        if (opt.signal.empty() || opt.reg_prices.empty()) throw InputError("--signal and --reg-prices go together");
        signal = load_signal_csv(opt.signal);
        prices = load_regulation_price_csv(opt.reg_prices);
        in.manifest_inputs.push_back(file_entry(opt.signal));
        in.manifest_inputs.push_back(file_entry(opt.reg_prices));
    }
    in.market.regulation.days = to_regulation_days(signal, prices, config.battery.power_mw);
    in.market.regulation.policy = config.regulation;
    if (in.market.regulation.days.size() < N) {
        throw InputError(fmt::format("regulation data covers {} days, horizon is {}",
                                     in.market.regulation.days.size(), N));
    }
    return in;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json config_json(const Config& config) { return json::parse(config_echo_json(config)); }

// Written before the run starts and rewritten with the outputs once it ends.
class Manifest {
public:
    Manifest(fs::path dir, std::string command, const Config& config, json inputs)
        : dir_(std::move(dir)) {
        body_ = json{{"tool", "batval"},
                     {"version", kVersion},
                     {"command", std::move(command)},
                     {"status", "running"},
                     {"config", config_json(config)},
                     {"inputs", std::move(inputs)},
                     {"outputs", json::array()}};
        write_json(dir_ / "manifest.json", body_);
    }

    void finish(const std::vector<std::string>& outputs) {
        for (const auto& name : outputs) {
            body_["outputs"].push_back(json{{"path", name}, {"sha256", sha256_file(dir_ / name)}});
        }
        body_["status"] = "complete";
        write_json(dir_ / "manifest.json", body_);
    }

private:
    fs::path dir_;
    json body_;
};

std::string eol_tag(double threshold) {
    return fmt::format("surface_eol{}.csv", static_cast<int>(std::lround(threshold * 100.0)));
}

int cmd_value(const Options& opt, StageMode mode, std::ostream& out) {
    Config config = load_run_config(opt);
    config.run.mode = mode;
    Inputs in = prepare_inputs(opt, config, mode);
    const fs::path dir(opt.out);
    fs::create_directories(dir);
    Manifest manifest(dir, "value " + to_string(mode), config, in.manifest_inputs);

    const ValuationResult r = run_valuation(config.run, config.battery, in.market);
    write_surface_csv(dir / "surface.csv", r.surface);
    write_marginal_cost_csv(dir / "marginal_cost.csv", r.surface);
    json summary{{"tool", "batval"},
                 {"version", kVersion},
                 {"command", "value " + to_string(mode)},
                 {"config", config_json(config)},
                 {"runtime_seconds", r.total_seconds},
                 {"stage_seconds", r.stage_seconds},
                 {"daily_solves", r.daily_solves},
                 {"flow_solves", r.flow_solves},
                 {"value_new_day1_usd", r.surface.value(0, 1)}};
    write_json(dir / "summary.json", summary);
    manifest.finish({"surface.csv", "marginal_cost.csv", "summary.json"});
    out << fmt::format("value {}: {} days x {} SoH samples in {:.2f} s, day-1 value of a new battery ${:.2f}\n",
                       to_string(mode), r.surface.horizon(), r.surface.samples(), r.total_seconds,
                       r.surface.value(0, 1));
    return 0;
}

int cmd_second_life(const Options& opt, std::ostream& out) {
    Config config = load_run_config(opt);
    try {
        config.run.mode = parse_stage_mode(opt.mode);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    Inputs in = prepare_inputs(opt, config, config.run.mode);
    const fs::path dir(opt.out);
    fs::create_directories(dir);
    Manifest manifest(dir, "second-life " + opt.mode, config, in.manifest_inputs);

    const SecondLifeResult r = second_life_analysis(config.run, config.battery, in.market, config.second_life);
    std::vector<std::string> outputs = {"second_life.csv"};
    write_second_life_csv(dir / "second_life.csv", r);
    for (std::size_t k = 0; k < r.scenario_surfaces.size(); ++k) {
        outputs.push_back(eol_tag(config.second_life.thresholds[k]));
        write_surface_csv(dir / outputs.back(), r.scenario_surfaces[k]);
    }
    json summary{{"tool", "batval"},
                 {"version", kVersion},
                 {"command", "second-life " + opt.mode},
                 {"config", config_json(config)},
                 {"runtime_seconds", r.total_seconds},
                 {"scenarios", config.second_life.thresholds.size()}};
    write_json(dir / "summary.json", summary);
    outputs.push_back("summary.json");
    manifest.finish(outputs);
    out << fmt::format("second-life {}: {} scenarios, {} days in {:.2f} s\n", opt.mode,
                       r.scenario_surfaces.size(), r.days.size(), r.total_seconds);
    return 0;
}

int cmd_check(const Options& opt, std::ostream& out, std::ostream& err) {
    const fs::path dir(opt.out);
    if (!fs::is_directory(dir)) throw InputError("no such directory " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("surface", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no surface CSV in " + dir.string());
    std::size_t problems = 0;
    for (const auto& file : files) {
        const ValueSurface surface = read_surface_csv(file);
        const auto found = check_surface(surface);
        for (const auto& v : found) {
            err << fmt::format("{}: day {}, SoH {}%: {}\n", file.filename().string(), v.day, v.soh_pct, v.kind);
        }
        if (found.empty()) out << fmt::format("{}: clean\n", file.filename().string());
        problems += found.size();
    }
    return problems == 0 ? 0 : 1;
}

int cmd_synth(const std::string& what, std::uint64_t seed, std::size_t days, const Config& config,
              const std::string& path, std::ostream& out) {
    if (days < 1) throw InputError("--days must be at least 1");
    if (what == "prices") {
        const auto& m = config.market;
        write_price_csv(path, synth_prices(seed, days, m.base_price, m.amplitude, m.noise_sd));
    } else if (what == "signal") {
        write_signal_csv(path, synth_signal(seed, days));
    } else {
        write_regulation_price_csv(path, synth_regulation_prices(seed, days, config.market.regulation_base));
    }
    out << fmt::format("wrote {}\n", path);
    return 0;
}

void add_inputs(CLI::App* cmd, Options& opt, bool arbitrage, bool regulation) {
    if (arbitrage) cmd->add_option("--prices", opt.prices, "5-min price CSV (timestamp,price_usd_per_mwh)");
    if (regulation) {
        cmd->add_option("--signal", opt.signal, "2-s signal CSV (timestamp,signal)");
        cmd->add_option("--reg-prices", opt.reg_prices, "hourly price CSV (timestamp,regd_price_usd_per_mw)");
    }
    cmd->add_option("--synth", opt.synth, "use synthetic data: seed=<integer>");
    cmd->add_option("--config", opt.config, "key = value configuration file");
    cmd->add_option("--threads", opt.threads, "worker threads per stage");
    cmd->add_option("--out", opt.out, "output directory")->required();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Battery lifetime valuation by backward induction over state of health", "batval"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options opt;

    auto* value = app.add_subcommand("value", "value a battery over the horizon");
    value->require_subcommand(1);
    auto* arb = value->add_subcommand("arbitrage", "optimization-driven recursion on energy prices");
    add_inputs(arb, opt, true, false);
    auto* reg = value->add_subcommand("regulation", "SoC-band policy on a regulation signal");
    add_inputs(reg, opt, false, true);

    auto* second = app.add_subcommand("second-life", "EoL scenario sweep: 80% vs 100% SoH");
    second->add_option("--mode", opt.mode, "arbitrage or regulation")->required();
    add_inputs(second, opt, true, true);

    auto* check = app.add_subcommand("check", "verify surface invariants of a run directory");
    check->add_option("--out", opt.out, "run directory")->required();

    std::string synth_kind;
    std::uint64_t synth_seed = 1;
    std::size_t synth_days = 1;
    std::string synth_path;
    auto* synth = app.add_subcommand("synth", "write a synthetic input CSV");
    synth->add_option("kind", synth_kind, "prices, signal or reg-prices")
        ->required()
        ->check(CLI::IsMember({"prices", "signal", "reg-prices"}));
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--days", synth_days, "number of days");
    synth->add_option("--config", opt.config, "configuration for market.* settings");
    synth->add_option("--file", synth_path, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (arb->parsed()) return cmd_value(opt, StageMode::Arbitrage, out);
        if (reg->parsed()) return cmd_value(opt, StageMode::Regulation, out);
        if (second->parsed()) return cmd_second_life(opt, out);
        if (check->parsed()) return cmd_check(opt, out, err);
        if (synth->parsed()) {
            const Config config = opt.config.empty() ? Config{} : load_config(opt.config);
            return cmd_synth(synth_kind, synth_seed, synth_days, config, synth_path, out);
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace batval
