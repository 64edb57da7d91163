#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "batval/arbitrage.hpp"
#include "batval/battery.hpp"
#include "batval/regulation.hpp"
#include "batval/value_function.hpp"

namespace batval {

enum class StageMode { Arbitrage, Regulation };

std::string to_string(StageMode mode);
StageMode parse_stage_mode(const std::string& text);

/// gamma = (1 + rate)^(-1/365). Throws std::domain_error for rate <= -1.
double daily_discount_from_annual(double annual_rate);

struct RunConfig {
    std::size_t horizon_days = 30;
    StageMode mode = StageMode::Arbitrage;
    double annual_discount_rate = 0.07;
    std::optional<double> daily_discount;  ///< overrides the annual rate when set
    double soh_step = 0.01;                ///< grid spacing, fraction of E^0
    bool resale = false;                   ///< overlay resale value on every day
    bool terminal_resale = false;          ///< terminal column = resale instead of 0
    int segments = 10;                     ///< J
    double initial_soc_fraction = 0.5;
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    [[nodiscard]] double discount() const;
    void validate() const;
};

/// Arbitrage market data: one price vector per day.
struct ArbitrageMarket {
    std::vector<std::vector<double>> daily_prices;
    double step_hours = 1.0 / 12.0;
};

struct RegulationMarket {
    std::vector<RegulationDay> days;
    PolicyParams policy;
};

class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ValuationResult {
    ValueSurface surface;
    std::vector<double> stage_seconds;  ///< index 0 is day 1
    double total_seconds = 0.0;
    std::size_t daily_solves = 0;
    std::size_t flow_solves = 0;
};

/// Optimization-driven backward induction over the SoH grid.
ValuationResult run_algorithm1(const RunConfig& config, const BatteryParams& params,
                               const ArbitrageMarket& market);

/// What a daily policy sees. `marginal_cost` is C_{i,n} in $/MWh of capacity.
struct PolicyContext {
    std::size_t day = 1;
    std::size_t sample = 0;
    double capacity_mwh = 0.0;
    double marginal_cost = 0.0;
    double next_value = 0.0;  ///< v_{i,n+1}
};

struct PolicyOutcome {
    DispatchProfile profile;
    double revenue = 0.0;
    double cycle_degradation = 0.0;
};

/// Daily operating rule for the simulation-driven recursion. `operate` is
/// called concurrently for distinct samples of one day; `prepare` runs once
/// before the first stage.
class DailyPolicy {
public:
    virtual ~DailyPolicy() = default;
    virtual void prepare(std::size_t samples) { (void)samples; }
    virtual PolicyOutcome operate(const PolicyContext& context) = 0;
};

/// SoC-band regulation rule. Degradation is counted with Rainflow on the
/// tick-level SoC trajectory.
class RegulationPolicy final : public DailyPolicy {
public:
    RegulationPolicy(const RegulationMarket& market, BatteryParams params,
                     double initial_soc_fraction = 0.5);
    PolicyOutcome operate(const PolicyContext& context) override;

private:
    const RegulationMarket& market_;
    BatteryParams params_;
    double initial_soc_;
};

/// Runs the daily arbitrage optimizer with degradation priced linearly at
/// C_{i,n}. Reports the optimizer's segment-model D_cyc.
class OptimizerPolicy final : public DailyPolicy {
public:
    OptimizerPolicy(const ArbitrageMarket& market, BatteryParams params, int segments,
                    double discount, double initial_soc_fraction = 0.5);
    void prepare(std::size_t samples) override;
    PolicyOutcome operate(const PolicyContext& context) override;

private:
    const ArbitrageMarket& market_;
    BatteryParams params_;
    int segments_;
    double discount_;
    double initial_soc_;
    std::vector<DailyArbitrageSolver> solvers_;
};

/// Algorithm with a supplied policy:
/// v_{i,n} = gamma * max(0, v_{i,n+1} - C_{i,n} D_{i,n} E^0) + O_{i,n}.
ValuationResult run_algorithm2(const RunConfig& config, const BatteryParams& params,
                               std::size_t horizon_days, DailyPolicy& policy);

/// End-of-life scenarios with probabilities.
struct EolScenarioSet {
    std::vector<double> thresholds = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75};
    std::vector<double> weights = {1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
    void validate() const;
};

struct SecondLifeDay {
    std::size_t day = 1;
    double new_value = 0.0;
    double second_life_value = 0.0;
    std::optional<double> ratio;  ///< absent when the new-battery value is 0
};

struct SecondLifeResult {
    std::vector<SecondLifeDay> days;
    std::vector<ValueSurface> scenario_surfaces;
    double total_seconds = 0.0;
};

/// Market data for either stage mode; only the member matching the mode is used.
struct MarketData {
    ArbitrageMarket arbitrage;
    RegulationMarket regulation;
};

/// One valuation in the configured mode: the optimizer-driven recursion for
/// arbitrage, the regulation policy otherwise.
ValuationResult run_valuation(const RunConfig& config, const BatteryParams& params,
                              const MarketData& market);

/// Values a new (100% SoH) and a second-life (80% SoH) battery under every
/// EoL scenario with resale disabled and reports the weighted values and
/// their ratio per day.
SecondLifeResult second_life_analysis(const RunConfig& config, const BatteryParams& params,
                                      const MarketData& market, const EolScenarioSet& scenarios);

/// Grid of the run: uniform SoH steps from 100% to the EoL threshold.
SohGrid make_grid(const RunConfig& config, const BatteryParams& params);

}  // namespace batval
