#pragma once

#include <vector>

#include "batval/degradation.hpp"

namespace batval {

/// Physical and commercial description of the storage asset.
struct BatteryParams {
    double power_mw = 0.5;
    double energy_mwh = 1.0;            ///< rated capacity E^0
    double round_trip_efficiency = 0.85;
    double warranty_threshold = 0.8;    ///< SoH below which resale value is zero
    double eol_threshold = 0.8;         ///< SoH at which the asset is retired
    double pack_price_usd_per_kwh = 200.0;
    StressFunction stress;
    CalendarModel calendar;

    /// Single-trip efficiency, sqrt of the round-trip figure.
    [[nodiscard]] double efficiency() const;

    /// Throws std::invalid_argument when an invariant does not hold.
    void validate() const;
};

/// Per-interval dispatch for one operating day.
///
/// `power_mw[t]` is positive for discharge. `soc_mwh` has one more entry than
/// `power_mw`: the day-start state followed by the state after each interval.
struct DispatchProfile {
    double step_hours = 1.0 / 12.0;
    double capacity_mwh = 1.0;
    std::vector<double> power_mw;
    std::vector<double> soc_mwh;

    [[nodiscard]] std::vector<double> soc_fraction() const;
};

/// Rainflow cycle degradation of the profile's SoC trajectory.
double daily_cycle_degradation(const DispatchProfile& profile, const BatteryParams& params);

}  // namespace batval
