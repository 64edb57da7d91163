#include "batval/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "batval/io.hpp"

namespace batval {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw std::invalid_argument("expected a number, got '" + text + "'");
    }
    return v;
}

template <class Int>
Int to_integer(const std::string& text) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("expected an integer, got '" + text + "'");
    }
    return v;
}

bool to_bool(const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
    if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
    return out;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + num(v[k]);
    return out;
}

struct Key {
    const char* name;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&)> set;
};

#define BATVAL_NUM(key, field) \
    Key{key, [](const Config& c) { return num(c.field); }, [](Config& c, const std::string& v) { c.field = to_double(v); }}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        BATVAL_NUM("battery.power_mw", battery.power_mw),
        BATVAL_NUM("battery.energy_mwh", battery.energy_mwh),
        BATVAL_NUM("battery.round_trip_efficiency", battery.round_trip_efficiency),
        BATVAL_NUM("battery.warranty_threshold", battery.warranty_threshold),
        BATVAL_NUM("battery.eol_threshold", battery.eol_threshold),
        BATVAL_NUM("battery.pack_price_usd_per_kwh", battery.pack_price_usd_per_kwh),
        BATVAL_NUM("degradation.stress_coefficient", battery.stress.coefficient),
        BATVAL_NUM("degradation.stress_exponent", battery.stress.exponent),
        BATVAL_NUM("degradation.calendar_fade_fraction", battery.calendar.eol_fraction_at_shelf_end),
        BATVAL_NUM("degradation.shelf_life_days", battery.calendar.shelf_life_days),
        Key{"engine.horizon_days", [](const Config& c) { return std::to_string(c.run.horizon_days); },
            [](Config& c, const std::string& v) { c.run.horizon_days = to_integer<std::size_t>(v); }},
        BATVAL_NUM("engine.annual_discount_rate", run.annual_discount_rate),
        Key{"engine.daily_discount",
            [](const Config& c) { return c.run.daily_discount ? num(*c.run.daily_discount) : std::string(); },
            [](Config& c, const std::string& v) {
                if (v.empty()) c.run.daily_discount.reset();
                else c.run.daily_discount = to_double(v);
            }},
        BATVAL_NUM("engine.soh_step", run.soh_step),
        Key{"engine.resale", [](const Config& c) { return std::string(c.run.resale ? "true" : "false"); },
            [](Config& c, const std::string& v) { c.run.resale = to_bool(v); }},
        Key{"engine.terminal_resale",
            [](const Config& c) { return std::string(c.run.terminal_resale ? "true" : "false"); },
            [](Config& c, const std::string& v) { c.run.terminal_resale = to_bool(v); }},
        Key{"engine.segments", [](const Config& c) { return std::to_string(c.run.segments); },
            [](Config& c, const std::string& v) { c.run.segments = to_integer<int>(v); }},
        BATVAL_NUM("engine.initial_soc", run.initial_soc_fraction),
        Key{"engine.seed", [](const Config& c) { return std::to_string(c.run.seed); },
            [](Config& c, const std::string& v) { c.run.seed = to_integer<std::uint64_t>(v); }},
        Key{"engine.threads", [](const Config& c) { return std::to_string(c.run.threads); },
            [](Config& c, const std::string& v) { c.run.threads = to_integer<std::size_t>(v); }},
        BATVAL_NUM("market.base_price", market.base_price),
        BATVAL_NUM("market.amplitude", market.amplitude),
        BATVAL_NUM("market.noise_sd", market.noise_sd),
        BATVAL_NUM("market.regulation_base_price", market.regulation_base),
        BATVAL_NUM("regulation.expected_price", regulation.expected_price),
        BATVAL_NUM("regulation.expected_signal_energy", regulation.expected_signal_energy),
        BATVAL_NUM("regulation.mileage_ratio", regulation.mileage_ratio),
        Key{"second_life.thresholds", [](const Config& c) { return list(c.second_life.thresholds); },
            [](Config& c, const std::string& v) { c.second_life.thresholds = to_list(v); }},
        Key{"second_life.weights", [](const Config& c) { return list(c.second_life.weights); },
            [](Config& c, const std::string& v) { c.second_life.weights = to_list(v); }},
    };
    return table;
}

#undef BATVAL_NUM

const Key* find_key(const std::string& name) {
    for (const Key& k : keys()) {
        if (name == k.name) return &k;
    }
    return nullptr;
}

}  // namespace

void Config::validate() const {
    run.validate();
    battery.validate();
    if (battery.eol_threshold > battery.warranty_threshold) {
        throw std::invalid_argument("end-of-life threshold must not exceed the warranty threshold");
    }
    PolicyParams policy = regulation;
    policy.efficiency = battery.efficiency();
    policy.validate();
    second_life.validate();
    make_grid(run, battery);
    for (double t : second_life.thresholds) {
        BatteryParams scenario = battery;
        scenario.eol_threshold = t;
        make_grid(run, scenario);
    }
    if (!(market.amplitude >= 0.0 && market.noise_sd >= 0.0 && market.regulation_base >= 0.0)) {
        throw std::invalid_argument("market amplitude, noise and regulation base must be >= 0");
    }
}

void set_config_value(Config& config, const std::string& key, const std::string& value) {
    const Key* k = find_key(key);
    if (!k) throw InputError("unknown config key '" + key + "'");
    try {
        k->set(config, value);
    } catch (const std::invalid_argument& e) {
        throw InputError(key + ": " + e.what());
    }
}

Config parse_config(const std::string& text) {
    Config config;
    std::set<std::string> seen;
    std::stringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw InputError(fmt::format("config line {}: expected key = value", line_no));
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (!seen.insert(key).second) throw InputError(fmt::format("config line {}: duplicate key '{}'", line_no, key));
        try {
            set_config_value(config, key, value);
        } catch (const InputError& e) {
            throw InputError(fmt::format("config line {}: {}", line_no, e.what()));
        }
    }
    // Weights follow the thresholds when only the thresholds were given.
    if (seen.count("second_life.thresholds") && !seen.count("second_life.weights")) {
        const auto n = config.second_life.thresholds.size();
        config.second_life.weights.assign(n, 1.0 / static_cast<double>(n));
    }
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    return config;
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const Config& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Key& k : keys()) out.emplace_back(k.name, k.get(config));
    return out;
}

std::string config_to_text(const Config& config) {
    std::string out;
    for (const auto& [key, value] : config_entries(config)) out += key + " = " + value + "\n";
    return out;
}

std::string config_echo_json(const Config& config) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, value] : config_entries(config)) j[key] = value;
    return j.dump(2);
}

Config config_from_echo_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config echo: ") + e.what());
    }
    if (!j.is_object()) throw InputError("config echo must be an object");
    std::string text;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_string()) throw InputError("config echo value for '" + key + "' must be a string");
        text += key + " = " + value.get<std::string>() + "\n";
    }
    return parse_config(text);
}

}  // namespace batval
