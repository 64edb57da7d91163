#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "batval/engine.hpp"

using namespace batval;

namespace {

std::vector<double> two_price_day() {
    std::vector<double> p(288, 0.0);
    for (std::size_t t = 144; t < 288; ++t) p[t] = 50.0;
    return p;
}

// Degradation is negligible but the stress model stays valid.
BatteryParams free_wear_params() {
    BatteryParams p;
    p.stress.coefficient = 1e-30;
    p.calendar.eol_fraction_at_shelf_end = 0.0;
    return p;
}

std::vector<std::vector<double>> noisy_days(std::size_t days, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 5.0);
    std::vector<std::vector<double>> out(days, std::vector<double>(288));
    for (auto& day : out) {
        for (std::size_t t = 0; t < day.size(); ++t) {
            const double hour = static_cast<double>(t) / 12.0;
            day[t] = 30.0 + 20.0 * std::cos(2.0 * M_PI * (hour - 18.0) / 24.0) + noise(rng);
        }
    }
    return out;
}

class IdlePolicy : public DailyPolicy {
public:
    PolicyOutcome operate(const PolicyContext& ctx) override {
        PolicyOutcome out;
        out.profile.capacity_mwh = ctx.capacity_mwh;
        return out;
    }
};

class FailingPolicy : public DailyPolicy {
public:
    PolicyOutcome operate(const PolicyContext&) override { throw std::runtime_error("boom"); }
};

}  // namespace

TEST(Discount, FromAnnualRate) {
    EXPECT_DOUBLE_EQ(daily_discount_from_annual(0.0), 1.0);
    EXPECT_NEAR(daily_discount_from_annual(0.07), 0.9998147, 1e-7);
    EXPECT_NEAR(daily_discount_from_annual(1.0), 0.998103, 1e-6);
    EXPECT_DOUBLE_EQ(daily_discount_from_annual(1.0), std::pow(2.0, -1.0 / 365.0));
    EXPECT_THROW(daily_discount_from_annual(-1.0), std::domain_error);
}

TEST(RunConfig, Validation) {
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    c.horizon_days = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = RunConfig{};
    c.daily_discount = 1.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.daily_discount = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.daily_discount = 1.0;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(parse_stage_mode("regulation"), StageMode::Regulation);
    EXPECT_EQ(to_string(StageMode::Arbitrage), "arbitrage");
    EXPECT_THROW(parse_stage_mode("spot"), std::invalid_argument);
}

TEST(Algorithm1, ZeroPricesGiveZeroSurface) {
    RunConfig c;
    c.horizon_days = 1;
    ArbitrageMarket m{{std::vector<double>(288, 0.0)}, 1.0 / 12.0};
    const auto r = run_algorithm1(c, BatteryParams{}, m);
    for (std::size_t i = 0; i < r.surface.samples(); ++i) EXPECT_NEAR(r.surface.value(i, 1), 0.0, 1e-9);
}

TEST(Algorithm1, TwoPriceSingleStage) {
    RunConfig c;
    c.horizon_days = 1;
    c.daily_discount = 1.0;
    c.soh_step = 0.2;
    c.initial_soc_fraction = 0.0;
    ArbitrageMarket m{{two_price_day()}, 1.0 / 12.0};
    const auto r = run_algorithm1(c, free_wear_params(), m);
    ASSERT_EQ(r.surface.samples(), 2u);
    EXPECT_NEAR(r.surface.value(0, 1), 46.10, 0.01);
    EXPECT_EQ(r.surface.value(1, 1), 0.0);
}

TEST(Algorithm1, TwoPriceStagesDecouple) {
    RunConfig c;
    c.horizon_days = 2;
    c.daily_discount = 1.0;
    c.soh_step = 0.2;
    c.initial_soc_fraction = 0.0;
    ArbitrageMarket m{{two_price_day(), two_price_day()}, 1.0 / 12.0};
    const auto r = run_algorithm1(c, free_wear_params(), m);
    EXPECT_NEAR(r.surface.value(0, 1), 2 * 46.10, 0.02);
    EXPECT_NEAR(r.surface.value(0, 2), 46.10, 0.01);
}

TEST(Algorithm1, ShortMarketDataRejected) {
    RunConfig c;
    c.horizon_days = 3;
    ArbitrageMarket m{noisy_days(2, 1), 1.0 / 12.0};
    EXPECT_THROW(run_algorithm1(c, BatteryParams{}, m), std::invalid_argument);
}

TEST(Algorithm1, SurfaceInvariantsAndHorizonMonotonicity) {
    RunConfig c;
    c.horizon_days = 6;
    c.daily_discount = 1.0;
    c.soh_step = 0.05;
    const auto day = noisy_days(1, 3).front();
    ArbitrageMarket m{std::vector<std::vector<double>>(6, day), 1.0 / 12.0};
    const auto r = run_algorithm1(c, BatteryParams{}, m);
    for (const auto& v : check_surface(r.surface)) {
        ADD_FAILURE() << v.kind << " day " << v.day << " soh " << v.soh_pct;
    }
    for (std::size_t i = 0; i < r.surface.samples(); ++i) {
        for (std::size_t n = 1; n <= 6; ++n) {
            EXPECT_GE(r.surface.value(i, n), r.surface.value(i, n + 1) - 1e-9) << i << " " << n;
        }
    }
    EXPECT_GT(r.surface.value(0, 1), 0.0);
    EXPECT_EQ(r.stage_seconds.size(), 6u);
    EXPECT_EQ(r.daily_solves, 6 * (r.surface.samples() - 1));
}

TEST(Algorithm1, ThreadCountDoesNotChangeSurface) {
    RunConfig c;
    c.horizon_days = 4;
    c.soh_step = 0.05;
    ArbitrageMarket m{noisy_days(4, 11), 1.0 / 12.0};
    const auto serial = run_algorithm1(c, BatteryParams{}, m);
    c.threads = 3;
    const auto threaded = run_algorithm1(c, BatteryParams{}, m);
    EXPECT_EQ(serial.surface, threaded.surface);
}

TEST(Algorithm1, ResaleOverlayDominatesCurve) {
    RunConfig c;
    c.horizon_days = 3;
    c.soh_step = 0.05;
    c.resale = true;
    c.terminal_resale = true;
    BatteryParams p;
    p.eol_threshold = 0.6;
    ArbitrageMarket m{noisy_days(3, 5), 1.0 / 12.0};
    const auto r = run_algorithm1(c, p, m);
    const ResaleCurve curve{p.pack_price_usd_per_kwh, p.warranty_threshold};
    const auto& caps = r.surface.grid().capacity_mwh;
    for (std::size_t n = 1; n <= 4; ++n) {
        for (std::size_t i = 0; i + 1 < caps.size(); ++i) {
            EXPECT_GE(r.surface.value(i, n), curve.value(caps[i], p.energy_mwh) - 1e-6);
        }
    }
    EXPECT_NEAR(r.surface.value(0, 4), 200000.0, 1e-6);
    EXPECT_TRUE(check_surface(r.surface).empty());
}

TEST(Algorithm2, IdleWithoutCalendarIsZero) {
    RunConfig c;
    c.horizon_days = 3;
    c.soh_step = 0.05;
    BatteryParams p;
    p.calendar.eol_fraction_at_shelf_end = 0.0;
    IdlePolicy idle;
    const auto r = run_algorithm2(c, p, 3, idle);
    for (std::size_t n = 1; n <= 4; ++n) {
        for (std::size_t i = 0; i < r.surface.samples(); ++i) EXPECT_EQ(r.surface.value(i, n), 0.0);
    }
}

TEST(Algorithm2, IdleWithCalendarLossFollowsStepFormula) {
    RunConfig c;
    c.horizon_days = 3;
    c.soh_step = 0.05;
    c.daily_discount = 1.0;
    c.terminal_resale = true;
    BatteryParams p;
    p.eol_threshold = 0.6;
    IdlePolicy idle;
    const auto r = run_algorithm2(c, p, 3, idle);
    const double d_cal = p.calendar.daily_rate();
    for (std::size_t n = 1; n <= 3; ++n) {
        for (std::size_t i = 0; i + 1 < r.surface.samples(); ++i) {
            const double C = marginal_cost(r.surface, i, n);
            const double expected = std::max(0.0, r.surface.value(i, n + 1) - C * d_cal * p.energy_mwh);
            EXPECT_NEAR(r.surface.value(i, n), expected, 1e-9);
        }
        EXPECT_EQ(r.surface.value(r.surface.samples() - 1, n), 0.0);
    }
    EXPECT_LT(r.surface.value(0, 1), r.surface.value(0, 4));
}

TEST(Algorithm2, PolicyErrorsCarryStageContext) {
    RunConfig c;
    c.horizon_days = 2;
    c.soh_step = 0.1;
    FailingPolicy bad;
    try {
        run_algorithm2(c, BatteryParams{}, 2, bad);
        FAIL() << "expected EngineError";
    } catch (const EngineError& e) {
        EXPECT_NE(std::string(e.what()).find("day 2, SoH 100%"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
    }
}

TEST(Algorithm2, OptimizerPolicyReproducesAlgorithm1) {
    RunConfig c;
    c.horizon_days = 8;
    c.soh_step = 0.01;
    BatteryParams p;
    ArbitrageMarket m{noisy_days(8, 21), 1.0 / 12.0};
    const auto a1 = run_algorithm1(c, p, m);
    OptimizerPolicy policy(m, p, c.segments, c.discount(), c.initial_soc_fraction);
    const auto a2 = run_algorithm2(c, p, c.horizon_days, policy);
    double worst = 0.0;
    for (std::size_t n = 1; n <= c.horizon_days; ++n) {
        for (std::size_t i = 0; i + 1 < a1.surface.samples(); ++i) {
            const double x = a1.surface.value(i, n);
            const double y = a2.surface.value(i, n);
            worst = std::max(worst, std::abs(x - y) / std::max(std::abs(x), 1e-9));
        }
    }
    EXPECT_LT(worst, 0.005);
}

TEST(Algorithm2, RegulationSurfaceIsValid) {
    RunConfig c;
    c.horizon_days = 2;
    c.soh_step = 0.05;
    c.mode = StageMode::Regulation;
    MarketData data;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> step(0.0, 0.05);
    for (int d = 0; d < 2; ++d) {
        RegulationDay day;
        day.signal.resize(43200);
        double x = 0.0;
        for (auto& s : day.signal) {
            x = std::clamp(0.98 * x + step(rng), -1.0, 1.0);
            s = x;
        }
        day.hourly_price.assign(24, 30.0);
        data.regulation.days.push_back(day);
    }
    const auto r = run_valuation(c, BatteryParams{}, data);
    EXPECT_TRUE(check_surface(r.surface).empty());
    EXPECT_GT(r.surface.value(0, 1), r.surface.value(0, 2));
    EXPECT_GT(r.surface.value(0, 2), 0.0);
}

TEST(SecondLife, TwoScenarioMeanAndRatioBounds) {
    RunConfig c;
    c.horizon_days = 3;
    c.soh_step = 0.05;
    MarketData data;
    data.arbitrage = {noisy_days(3, 2), 1.0 / 12.0};
    EolScenarioSet s{{0.70, 0.75}, {0.5, 0.5}};
    const auto r = second_life_analysis(c, BatteryParams{}, data, s);
    ASSERT_EQ(r.days.size(), 3u);
    ASSERT_EQ(r.scenario_surfaces.size(), 2u);
    for (const auto& d : r.days) {
        const auto& a = r.scenario_surfaces[0];
        const auto& b = r.scenario_surfaces[1];
        EXPECT_NEAR(d.new_value, 0.5 * (a.value(0, d.day) + b.value(0, d.day)), 1e-9);
        // 80% is index 4 on both grids.
        EXPECT_NEAR(d.second_life_value, 0.5 * (a.value(4, d.day) + b.value(4, d.day)), 1e-9);
        ASSERT_TRUE(d.ratio.has_value());
        EXPECT_GT(*d.ratio, 0.0);
        EXPECT_LE(*d.ratio, 1.0);
    }
}

TEST(SecondLife, ZeroPricesLeaveRatioAbsent) {
    RunConfig c;
    c.horizon_days = 2;
    c.soh_step = 0.05;
    MarketData data;
    data.arbitrage = {std::vector<std::vector<double>>(2, std::vector<double>(288, 0.0)), 1.0 / 12.0};
    EolScenarioSet s{{0.70}, {1.0}};
    const auto r = second_life_analysis(c, BatteryParams{}, data, s);
    for (const auto& d : r.days) EXPECT_FALSE(d.ratio.has_value());
}

TEST(SecondLife, ScenarioValidation) {
    EXPECT_NO_THROW(EolScenarioSet{}.validate());
    EXPECT_THROW((EolScenarioSet{{0.7, 0.6}, {0.5, 0.5}}.validate()), std::invalid_argument);
    EXPECT_THROW((EolScenarioSet{{0.6, 0.7}, {0.5, 0.6}}.validate()), std::invalid_argument);
}
