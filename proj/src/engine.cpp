#include "batval/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>

namespace batval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs f(0..n-1) on up to `threads` workers. Work items must not share
// mutable state, so the result does not depend on the split.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    threads = std::min(threads, n);
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

ResaleCurve resale_curve(const BatteryParams& params) {
    return {params.pack_price_usd_per_kwh, params.warranty_threshold};
}

std::string where(const SohGrid& grid, std::size_t day, std::size_t i) {
    return fmt::format("day {}, SoH {}%", day, grid.soh_pct(i));
}

void seed_terminal(ValueSurface& surface, const RunConfig& config, const BatteryParams& params) {
    if (config.terminal_resale) {
        apply_resale_overlay(surface, surface.horizon() + 1, resale_curve(params));
    }
}

void finish_stage(ValueSurface& surface, std::size_t day, const RunConfig& config,
                  const BatteryParams& params) {
    surface.set(surface.samples() - 1, day, 0.0);
    if (config.resale) apply_resale_overlay(surface, day, resale_curve(params));
}

}  // namespace

std::string to_string(StageMode mode) {
    return mode == StageMode::Arbitrage ? "arbitrage" : "regulation";
}

StageMode parse_stage_mode(const std::string& text) {
    if (text == "arbitrage") return StageMode::Arbitrage;
    if (text == "regulation") return StageMode::Regulation;
    throw std::invalid_argument("unknown stage mode '" + text + "'");
}

double daily_discount_from_annual(double annual_rate) {
    if (!(annual_rate > -1.0)) throw std::domain_error("annual rate must exceed -1");
    return std::pow(1.0 + annual_rate, -1.0 / 365.0);
}

double RunConfig::discount() const {
    return daily_discount ? *daily_discount : daily_discount_from_annual(annual_discount_rate);
}

void RunConfig::validate() const {
    if (horizon_days < 1) throw std::invalid_argument("horizon must be at least one day");
    const double g = discount();
    if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("daily discount must lie in (0, 1]");
    if (!(soh_step > 0.0 && soh_step < 1.0)) throw std::invalid_argument("SoH step must lie in (0, 1)");
    if (segments < 1) throw std::invalid_argument("segment count must be at least 1");
    if (!(initial_soc_fraction >= 0.0 && initial_soc_fraction <= 1.0)) {
        throw std::invalid_argument("initial SoC fraction must lie in [0, 1]");
    }
    if (threads < 1) throw std::invalid_argument("thread count must be at least 1");
}

SohGrid make_grid(const RunConfig& config, const BatteryParams& params) {
    return SohGrid::uniform(params.energy_mwh, params.eol_threshold, config.soh_step);
}

ValuationResult run_algorithm1(const RunConfig& config, const BatteryParams& params,
                               const ArbitrageMarket& market) {
    config.validate();
    params.validate();
    const std::size_t N = config.horizon_days;
    if (market.daily_prices.size() < N) {
        throw std::invalid_argument(fmt::format("price data covers {} days, horizon is {}",
                                                market.daily_prices.size(), N));
    }
    const auto start = Clock::now();
    ValuationResult result;
    result.surface = ValueSurface(make_grid(config, params), N);
    ValueSurface& surface = result.surface;
    const SohGrid& grid = surface.grid();
    const auto& caps = grid.capacity_mwh;
    const std::size_t active = surface.samples() - 1;
    const double gamma = config.discount();
    const double calendar = params.calendar.daily_rate();
    seed_terminal(surface, config, params);

    std::vector<DailyArbitrageSolver> solvers(active);
    std::vector<LinearizedStress> stress(active);
    for (std::size_t i = 0; i < active; ++i) {
        stress[i] = linearize_stress(params.stress, config.segments, params.efficiency(), caps[i]);
    }
    std::vector<std::size_t> flow_solves(active, 0);
    result.stage_seconds.assign(N, 0.0);

    for (std::size_t n = N; n >= 1; --n) {
        const auto stage_start = Clock::now();
        const ConcaveCuts cuts = cuts_for_day(surface, n + 1);
        const auto& prices = market.daily_prices[n - 1];
        parallel_for(active, config.threads, [&](std::size_t i) {
            DailyArbitrageInstance inst;
            inst.prices = prices;
            inst.step_hours = market.step_hours;
            inst.capacity_mwh = caps[i];
            inst.cuts = cuts;
            inst.params = params;
            inst.stress = stress[i];
            inst.calendar_rate = calendar;
            inst.discount = gamma;
            inst.initial_soc_fraction = config.initial_soc_fraction;
            DailySolution sol;
            try {
                sol = solvers[i].solve(inst);
            } catch (const std::exception& e) {
                throw EngineError(where(grid, n, i) + ": " + e.what());
            }
            // A capacity below the last knot has reached end of life.
            const double future = sol.end_capacity_mwh < caps.back() ? 0.0 : sol.future_value;
            surface.set(i, n, sol.revenue + gamma * future);
            flow_solves[i] += sol.lp_solves;
        });
        finish_stage(surface, n, config, params);
        result.stage_seconds[n - 1] = seconds_since(stage_start);
    }
    result.daily_solves = N * active;
    for (std::size_t k : flow_solves) result.flow_solves += k;
    result.total_seconds = seconds_since(start);
    return result;
}

RegulationPolicy::RegulationPolicy(const RegulationMarket& market, BatteryParams params,
                                   double initial_soc_fraction)
    : market_(market), params_(std::move(params)), initial_soc_(initial_soc_fraction) {}

PolicyOutcome RegulationPolicy::operate(const PolicyContext& ctx) {
    if (ctx.day < 1 || ctx.day > market_.days.size()) {
        throw std::out_of_range(fmt::format("no regulation data for day {}", ctx.day));
    }
    PolicyParams policy = market_.policy;
    policy.efficiency = params_.efficiency();
    // The band rule prices depth against wear of the current capacity.
    const double cost = ctx.marginal_cost * params_.energy_mwh / ctx.capacity_mwh;
    const double depth = soc_band(policy, params_.stress, cost);
    RegulationOutcome sim = simulate_day(market_.days[ctx.day - 1], ctx.capacity_mwh, depth,
                                         params_, initial_soc_);
    PolicyOutcome out;
    out.cycle_degradation = daily_cycle_degradation(sim.profile, params_);
    out.revenue = sim.revenue;
    out.profile = std::move(sim.profile);
    return out;
}

OptimizerPolicy::OptimizerPolicy(const ArbitrageMarket& market, BatteryParams params, int segments,
                                 double discount, double initial_soc_fraction)
    : market_(market),
      params_(std::move(params)),
      segments_(segments),
      discount_(discount),
      initial_soc_(initial_soc_fraction) {}

void OptimizerPolicy::prepare(std::size_t samples) { solvers_.resize(samples); }

PolicyOutcome OptimizerPolicy::operate(const PolicyContext& ctx) {
    if (ctx.day < 1 || ctx.day > market_.daily_prices.size()) {
        throw std::out_of_range(fmt::format("no price data for day {}", ctx.day));
    }
    if (ctx.sample >= solvers_.size()) throw std::out_of_range("policy not prepared for sample");
    // Next-day value seen as one line of slope C through the sample.
    const ConcaveCuts::Line line{ctx.marginal_cost, ctx.next_value - ctx.marginal_cost * ctx.capacity_mwh};
    DailyArbitrageInstance inst = make_instance(market_.daily_prices[ctx.day - 1], market_.step_hours,
                                                ctx.capacity_mwh, ConcaveCuts({line}), params_,
                                                segments_, params_.calendar.daily_rate(), discount_);
    inst.initial_soc_fraction = initial_soc_;
    const DailySolution sol = solvers_[ctx.sample].solve(inst);
    PolicyOutcome out;
    out.revenue = sol.revenue;
    out.cycle_degradation = sol.cycle_degradation;
    out.profile = sol.profile(market_.step_hours, ctx.capacity_mwh);
    return out;
}

ValuationResult run_algorithm2(const RunConfig& config, const BatteryParams& params,
                               std::size_t horizon_days, DailyPolicy& policy) {
    RunConfig cfg = config;
    cfg.horizon_days = horizon_days;
    cfg.validate();
    params.validate();
    const std::size_t N = horizon_days;
    const auto start = Clock::now();
    ValuationResult result;
    result.surface = ValueSurface(make_grid(cfg, params), N);
    ValueSurface& surface = result.surface;
    const SohGrid& grid = surface.grid();
    const auto& caps = grid.capacity_mwh;
    const std::size_t active = surface.samples() - 1;
    const double gamma = cfg.discount();
    const double calendar = params.calendar.daily_rate();
    const double rated = params.energy_mwh;
    seed_terminal(surface, cfg, params);
    policy.prepare(active);
    result.stage_seconds.assign(N, 0.0);

    for (std::size_t n = N; n >= 1; --n) {
        const auto stage_start = Clock::now();
        parallel_for(active, cfg.threads, [&](std::size_t i) {
            PolicyContext ctx;
            ctx.day = n;
            ctx.sample = i;
            ctx.capacity_mwh = caps[i];
            ctx.marginal_cost = marginal_cost(surface, i, n);
            ctx.next_value = surface.value(i, n + 1);
            PolicyOutcome out;
            try {
                out = policy.operate(ctx);
            } catch (const std::exception& e) {
                throw EngineError(where(grid, n, i) + ": " + e.what());
            }
            const double wear = out.cycle_degradation + calendar;
            const double future = std::max(0.0, ctx.next_value - ctx.marginal_cost * wear * rated);
            surface.set(i, n, gamma * future + out.revenue);
        });
        finish_stage(surface, n, cfg, params);
        result.stage_seconds[n - 1] = seconds_since(stage_start);
    }
    result.daily_solves = N * active;
    result.total_seconds = seconds_since(start);
    return result;
}

ValuationResult run_valuation(const RunConfig& config, const BatteryParams& params,
                              const MarketData& market) {
    if (config.mode == StageMode::Arbitrage) return run_algorithm1(config, params, market.arbitrage);
    if (market.regulation.days.size() < config.horizon_days) {
        throw std::invalid_argument(fmt::format("regulation data covers {} days, horizon is {}",
                                                market.regulation.days.size(), config.horizon_days));
    }
    RegulationPolicy policy(market.regulation, params, config.initial_soc_fraction);
    return run_algorithm2(config, params, config.horizon_days, policy);
}

void EolScenarioSet::validate() const {
    if (thresholds.empty() || thresholds.size() != weights.size()) {
        throw std::invalid_argument("EoL scenarios need one weight per threshold");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        if (!(thresholds[k] > 0.0 && thresholds[k] < 1.0)) {
            throw std::invalid_argument("EoL thresholds must lie in (0, 1)");
        }
        if (k > 0 && !(thresholds[k] > thresholds[k - 1])) {
            throw std::invalid_argument("EoL thresholds must be strictly increasing");
        }
        if (!(weights[k] >= 0.0)) throw std::invalid_argument("EoL weights must be non-negative");
        sum += weights[k];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("EoL weights must sum to 1");
}

SecondLifeResult second_life_analysis(const RunConfig& config, const BatteryParams& params,
                                      const MarketData& market, const EolScenarioSet& scenarios) {
    scenarios.validate();
    const auto start = Clock::now();
    RunConfig cfg = config;
    cfg.resale = false;
    cfg.terminal_resale = false;
    const std::size_t N = cfg.horizon_days;

    SecondLifeResult result;
    result.days.resize(N);
    for (std::size_t n = 1; n <= N; ++n) result.days[n - 1].day = n;
    for (std::size_t k = 0; k < scenarios.thresholds.size(); ++k) {
        BatteryParams p = params;
        p.eol_threshold = scenarios.thresholds[k];
        ValuationResult run = run_valuation(cfg, p, market);
        const auto& caps = run.surface.grid().capacity_mwh;
        std::optional<std::size_t> second;
        for (std::size_t i = 0; i < caps.size(); ++i) {
            if (std::abs(caps[i] - 0.8 * p.energy_mwh) <= 1e-9 * p.energy_mwh) second = i;
        }
        const double w = scenarios.weights[k];
        for (std::size_t n = 1; n <= N; ++n) {
            SecondLifeDay& d = result.days[n - 1];
            d.new_value += w * run.surface.value(0, n);
            if (second) d.second_life_value += w * run.surface.value(*second, n);
        }
        result.scenario_surfaces.push_back(std::move(run.surface));
    }
    for (SecondLifeDay& d : result.days) {
        if (d.new_value > 0.0) d.ratio = d.second_life_value / d.new_value;
    }
    result.total_seconds = seconds_since(start);
    return result;
}

}  // namespace batval
