#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "batval/battery.hpp"
#include "batval/degradation.hpp"
#include "batval/value_function.hpp"

namespace batval {

/// One day of price arbitrage for a fixed starting capacity.
///
/// The optimizer maximizes energy revenue plus the discounted next-day value
/// `cuts(E)` of the end-of-day capacity E = E_n - (D_cyc + D_cal) * E^0, where
/// D_cyc follows the segment-linearized cycle model.
struct DailyArbitrageInstance {
    std::vector<double> prices;        ///< $/MWh per interval, negatives allowed
    double step_hours = 1.0 / 12.0;
    double capacity_mwh = 1.0;         ///< E_n, fixed for the day
    ConcaveCuts cuts;                  ///< next-day value over capacity; empty means zero
    BatteryParams params;
    LinearizedStress stress;
    double calendar_rate = 0.0;        ///< D_cal, fraction of E^0 per day
    double discount = 1.0;             ///< gamma
    double initial_soc_fraction = 0.5; ///< e_{n,0} / E_n

    void validate() const;
};

/// Convenience builder using the default J-segment linearization at E_n.
DailyArbitrageInstance make_instance(std::vector<double> prices, double step_hours,
                                     double capacity_mwh, ConcaveCuts cuts,
                                     const BatteryParams& params, int segments,
                                     double calendar_rate, double discount);

struct DailySolution {
    std::vector<double> power_mw;                       ///< + discharge / - charge
    std::vector<std::vector<double>> discharge_mw;      ///< [t][j] at the terminals
    std::vector<std::vector<double>> charge_mw;         ///< [t][j] at the terminals
    std::vector<double> soc_mwh;                        ///< T + 1 entries, day start first
    std::vector<std::vector<double>> segment_soc_mwh;   ///< [t][j], T + 1 rows
    double objective = 0.0;
    double revenue = 0.0;
    double cycle_degradation = 0.0;
    double end_capacity_mwh = 0.0;
    double future_value = 0.0;   ///< cuts(end capacity), undiscounted
    double dual_bound = 0.0;     ///< Lagrangian upper bound on the objective
    std::size_t lp_solves = 0;
    std::size_t pivots = 0;

    [[nodiscard]] DispatchProfile profile(double step_hours, double capacity_mwh) const;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Re-usable daily solver. Keeps the flow network and its optimal basis so
/// that consecutive instances with the same shape (interval count, segment
/// widths, initial fill) warm-start. Not thread-safe; use one per worker.
class DailyArbitrageSolver {
public:
    DailyArbitrageSolver();
    ~DailyArbitrageSolver();
    DailyArbitrageSolver(DailyArbitrageSolver&&) noexcept;
    DailyArbitrageSolver& operator=(DailyArbitrageSolver&&) noexcept;

    /// Relative optimality tolerance between the returned objective and the
    /// dual bound.
    static constexpr double kRelativeTolerance = 1e-9;

    DailySolution solve(const DailyArbitrageInstance& instance);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Cold-start solve of a single instance.
DailySolution solve_daily(const DailyArbitrageInstance& instance);

struct ConstraintViolation {
    std::string constraint;
    std::size_t interval = 0;
    double amount = 0.0;
};

/// Lists every violated operating constraint (SoC dynamics and bounds, power
/// limits, negative-price discharge ban, terminal SoC, segment model,
/// degradation bookkeeping) beyond `tolerance` absolute.
std::vector<ConstraintViolation> verify_solution(const DailyArbitrageInstance& instance,
                                                 const DailySolution& solution,
                                                 double tolerance = 1e-8);

}  // namespace batval
