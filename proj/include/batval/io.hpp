#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "batval/engine.hpp"

namespace batval {

/// Input that fails validation (bad rows, gaps, unknown keys). The CLI maps
/// it to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seconds since 1970-01-01T00:00:00Z.
using UnixSeconds = std::int64_t;

/// Parses `YYYY-MM-DDTHH:MM:SSZ` (the trailing Z may be omitted).
std::optional<UnixSeconds> parse_timestamp(const std::string& text);
std::string format_timestamp(UnixSeconds t);

/// Evenly spaced samples, first one at UTC midnight, whole days only.
struct TimeSeries {
    UnixSeconds start = 0;
    std::int64_t step_seconds = 300;
    std::vector<double> values;

    [[nodiscard]] std::size_t points_per_day() const;
    [[nodiscard]] std::size_t days() const;
    [[nodiscard]] std::vector<double> day(std::size_t index) const;  ///< 0-based
};

using PriceSeries = TimeSeries;   ///< 5-min, $/MWh
using SignalSeries = TimeSeries;  ///< 2-s, dimensionless in [-1, 1]
using HourlySeries = TimeSeries;  ///< 1-h, $/MW-h

PriceSeries load_price_csv(const std::filesystem::path& path);
SignalSeries load_signal_csv(const std::filesystem::path& path);
HourlySeries load_regulation_price_csv(const std::filesystem::path& path);

void write_price_csv(const std::filesystem::path& path, const PriceSeries& series);
void write_signal_csv(const std::filesystem::path& path, const SignalSeries& series);
void write_regulation_price_csv(const std::filesystem::path& path, const HourlySeries& series);

/// First synthetic sample time, 2020-01-01T00:00:00Z.
inline constexpr UnixSeconds kSyntheticStart = 1577836800;

/// Diurnal price shape (trough at 04:00, peak at 18:00) plus Gaussian noise.
/// Noise comes from mt19937_64 through a fixed Box-Muller transform, so the
/// series depends only on the arguments.
PriceSeries synth_prices(std::uint64_t seed, std::size_t days, double base, double amplitude,
                         double noise_sd);

/// Mean-reverting walk, recentred every hour to a zero mean and scaled into
/// [-1, 1].
SignalSeries synth_signal(std::uint64_t seed, std::size_t days);

/// Hourly regulation capacity prices around `base`, never negative.
HourlySeries synth_regulation_prices(std::uint64_t seed, std::size_t days, double base);

ArbitrageMarket to_market(const PriceSeries& prices);
std::vector<RegulationDay> to_regulation_days(const SignalSeries& signal, const HourlySeries& prices,
                                              double capacity_mw);

void write_surface_csv(const std::filesystem::path& path, const ValueSurface& surface);
void write_marginal_cost_csv(const std::filesystem::path& path, const ValueSurface& surface);
void write_second_life_csv(const std::filesystem::path& path, const SecondLifeResult& result);

/// Reads a surface CSV back; capacities are expressed in fractions of rated.
ValueSurface read_surface_csv(const std::filesystem::path& path);

/// Lower-case hex SHA-256 of the file's raw bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace batval
