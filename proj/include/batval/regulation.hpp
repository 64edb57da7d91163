#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "batval/battery.hpp"

namespace batval {

/// One day of regulation service: the normalized instruction at a fixed tick,
/// hourly capacity prices and the capacity offered.
struct RegulationDay {
    std::vector<double> signal;          ///< r in [-1, 1]
    std::vector<double> hourly_price;    ///< $/MW per hour, 24 entries
    double capacity_mw = 0.5;            ///< B
    double tick_seconds = 2.0;

    [[nodiscard]] std::size_t ticks_per_hour() const;
    /// Throws std::invalid_argument unless the signal covers 24 whole hours,
    /// |r| <= 1, prices are finite and 0 < B <= max_power_mw.
    void validate(double max_power_mw) const;
};

/// Inputs of the SoC-band control rule.
struct PolicyParams {
    double expected_price = 23.0;            ///< mu_lambda, $/MW-h
    double expected_signal_energy = 0.35;    ///< mu_r, MWh per MW offered per hour
    double mileage_ratio = 3.0;
    double efficiency = 0.92195444572928873; ///< single trip

    void validate() const;
    /// pi = (2/3) mu_lambda / (mu_r * mileage_ratio), $/MWh.
    [[nodiscard]] double pi() const;
};

/// Depth limit u for marginal degradation cost C ($/MWh of capacity).
/// C == 0 means wear is free and returns 1; C < 0 throws std::domain_error.
double soc_band(const PolicyParams& policy, const StressFunction& stress, double marginal_cost);

/// Accuracy, correlation and delay components and their mean.
struct PerformanceScore {
    double accuracy = 0.0;
    double correlation = 0.0;
    double delay = 1.0;
    [[nodiscard]] double total() const { return (accuracy + correlation + delay) / 3.0; }
};

/// Scores `response` (MW) against `instruction` (normalized) scaled by
/// `capacity_mw`. Throws std::invalid_argument on a length mismatch or fewer
/// than two samples.
PerformanceScore performance_score(std::span<const double> response,
                                   std::span<const double> instruction, double capacity_mw);

struct RegulationOutcome {
    DispatchProfile profile;            ///< one entry per tick
    std::vector<double> hourly_score;   ///< rho per hour
    double revenue = 0.0;               ///< sum_h rho_h * lambda_h * B
};

/// Follows the signal tick by tick, clipping power to [-P, P] and SoC to the
/// band of depth `depth` centred on the day-start SoC, intersected with
/// [0, E_n].
RegulationOutcome simulate_day(const RegulationDay& day, double capacity_mwh, double depth,
                               const BatteryParams& params, double initial_soc_fraction = 0.5);

}  // namespace batval
