#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "batval/engine.hpp"

namespace batval {

/// Synthetic data settings.
struct MarketConfig {
    double base_price = 30.0;       ///< $/MWh
    double amplitude = 20.0;        ///< $/MWh
    double noise_sd = 5.0;          ///< $/MWh
    double regulation_base = 30.0;  ///< $/MW-h
};

struct Config {
    RunConfig run;
    BatteryParams battery;
    MarketConfig market;
    PolicyParams regulation;
    EolScenarioSet second_life;

    void validate() const;
};

/// Flat `key = value` text. `#` starts a comment; blank lines are ignored.
/// Unknown keys, duplicates and unparsable values raise InputError with the
/// line number.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

/// Every key with its current value, in documentation order.
std::vector<std::pair<std::string, std::string>> config_entries(const Config& config);

/// Renders the entries back to text that parse_config accepts.
std::string config_to_text(const Config& config);

/// Sets one key from its textual value.
void set_config_value(Config& config, const std::string& key, const std::string& value);

}  // namespace batval

namespace batval {

/// The configuration as a JSON object of key -> value, for run summaries.
std::string config_echo_json(const Config& config);

/// Inverse of config_echo_json.
Config config_from_echo_json(const std::string& json_text);

}  // namespace batval
