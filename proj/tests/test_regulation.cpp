#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "batval/regulation.hpp"

using namespace batval;

namespace {

PolicyParams pi_ten() {
    PolicyParams p;
    p.expected_price = 15.0;
    p.expected_signal_energy = 1.0;
    p.mileage_ratio = 1.0;
    p.efficiency = 0.922;
    return p;
}

RegulationDay flat_day(double value) {
    RegulationDay d;
    d.signal.assign(43200, value);
    d.hourly_price.assign(24, 0.0);
    for (std::size_t h = 0; h < 24; ++h) d.hourly_price[h] = 10.0 + static_cast<double>(h);
    d.capacity_mw = 0.5;
    return d;
}

// Seeded mean-reverting walk, re-centred per hour and scaled into [-1, 1].
RegulationDay random_day(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    RegulationDay d = flat_day(0.0);
    for (std::size_t h = 0; h < 24; ++h) {
        double x = 0.0;
        std::vector<double> hour(1800);
        for (double& v : hour) {
            x += -0.01 * x + 0.08 * n(rng);
            v = x;
        }
        double mean = 0.0;
        for (double v : hour) mean += v / 1800.0;
        double peak = 0.0;
        for (double& v : hour) {
            v -= mean;
            peak = std::max(peak, std::abs(v));
        }
        for (std::size_t k = 0; k < 1800; ++k) d.signal[h * 1800 + k] = hour[k] / std::max(1.0, peak);
    }
    return d;
}

}  // namespace

TEST(SocBand, Examples) {
    const StressFunction phi;
    const PolicyParams p = pi_ten();
    EXPECT_NEAR(p.pi(), 10.0, 1e-12);
    EXPECT_NEAR(soc_band(p, phi, 6.427e4), 0.5, 1e-3);
    const double eta = 0.922;
    const double at_full = (eta * eta + 1.0) / (eta * phi.derivative(1.0)) * 10.0;
    EXPECT_NEAR(soc_band(p, phi, at_full), 1.0, 1e-12);
    EXPECT_EQ(soc_band(p, phi, at_full / 10.0), 1.0);
    EXPECT_LT(soc_band(p, phi, 1e12), 1e-6);
    EXPECT_EQ(soc_band(p, phi, 0.0), 1.0);
    EXPECT_THROW(soc_band(p, phi, -1.0), std::domain_error);
}

TEST(SocBand, StrictlyDecreasingBeforeClamp) {
    const StressFunction phi;
    const PolicyParams p = pi_ten();
    double prev = 2.0;
    for (int k = 0; k <= 60; ++k) {
        const double c = std::pow(10.0, 4.6 + 0.05 * k);
        const double u = soc_band(p, phi, c);
        EXPECT_LT(u, prev);
        prev = u;
    }
}

TEST(Score, Examples) {
    std::vector<double> r(100);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = std::sin(0.1 * static_cast<double>(k));
    std::vector<double> exact(r.size()), zero(r.size(), 0.0), half(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        exact[k] = 0.5 * r[k];
        half[k] = 0.25 * r[k];
    }
    EXPECT_NEAR(performance_score(exact, r, 0.5).total(), 1.0, 1e-12);
    const auto z = performance_score(zero, r, 0.5);
    EXPECT_EQ(z.accuracy, 0.0);
    EXPECT_EQ(z.correlation, 0.0);
    EXPECT_EQ(z.delay, 1.0);
    EXPECT_NEAR(z.total(), 1.0 / 3.0, 1e-12);
    const auto h = performance_score(half, r, 0.5);
    EXPECT_NEAR(h.accuracy, 0.5, 1e-12);
    EXPECT_NEAR(h.correlation, 1.0, 1e-12);
    EXPECT_NEAR(h.total(), 2.5 / 3.0, 1e-12);
    EXPECT_NEAR(performance_score(zero, zero, 0.5).total(), 1.0, 1e-12);
    EXPECT_THROW(performance_score(zero, std::vector<double>(3, 0.0), 0.5), std::invalid_argument);
    EXPECT_THROW(performance_score(std::vector<double>{1.0}, std::vector<double>{1.0}, 0.5),
                 std::invalid_argument);
}

TEST(Score, AlwaysInUnitInterval) {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> p(50), r(50);
        for (std::size_t k = 0; k < 50; ++k) {
            p[k] = u(rng);
            r[k] = u(rng);
        }
        const double rho = performance_score(p, r, 0.5).total();
        EXPECT_GE(rho, 0.0);
        EXPECT_LE(rho, 1.0);
    }
}

TEST(Simulate, NullSignal) {
    const BatteryParams params;
    const RegulationDay d = flat_day(0.0);
    const auto out = simulate_day(d, 1.0, 0.5, params);
    for (double e : out.profile.soc_mwh) EXPECT_EQ(e, 0.5);
    double expected = 0.0;
    for (std::size_t h = 0; h < 24; ++h) {
        EXPECT_EQ(out.hourly_score[h], 1.0);
        expected += d.hourly_price[h] * d.capacity_mw;
    }
    EXPECT_NEAR(out.revenue, expected, 1e-9);
    EXPECT_EQ(daily_cycle_degradation(out.profile, params), 0.0);
}

TEST(Simulate, ZeroBandNeverMoves) {
    const BatteryParams params;
    const RegulationDay d = random_day(3);
    const auto out = simulate_day(d, 1.0, 0.0, params);
    for (double e : out.profile.soc_mwh) EXPECT_EQ(e, 0.5);
    for (double p : out.profile.power_mw) EXPECT_EQ(p, 0.0);
    const std::vector<double> zero(1800, 0.0);
    for (std::size_t h = 0; h < 24; ++h) {
        const std::span<const double> r(d.signal.data() + h * 1800, 1800);
        EXPECT_NEAR(out.hourly_score[h], performance_score(zero, r, 0.5).total(), 1e-15);
    }
}

TEST(Simulate, SquareWaveTrackedExactly) {
    const BatteryParams params;
    RegulationDay d = flat_day(0.0);
    for (std::size_t k = 0; k < 1800; ++k) d.signal[k] = (k / 300) % 2 == 0 ? 1.0 : -1.0;
    const auto out = simulate_day(d, 1.0, 1.0, params);
    const double eta = params.efficiency();
    double e = 0.5;
    for (std::size_t k = 0; k < d.signal.size(); ++k) {
        const double p = d.signal[k] * 0.5;
        EXPECT_EQ(out.profile.power_mw[k], p) << "tick " << k;
        e -= p > 0.0 ? p * (2.0 / 3600.0) / eta : p * (2.0 / 3600.0) * eta;
        EXPECT_NEAR(out.profile.soc_mwh[k + 1], e, 1e-12);
    }
    for (double rho : out.hourly_score) EXPECT_NEAR(rho, 1.0, 1e-12);
}

TEST(Simulate, StaysInsideBand) {
    const BatteryParams params;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const RegulationDay d = random_day(seed);
        for (double depth : {0.05, 0.2, 0.6, 1.0}) {
            for (double cap : {1.0, 0.9}) {
                const auto out = simulate_day(d, cap, depth, params);
                for (double e : out.profile.soc_mwh) {
                    EXPECT_GE(e, std::max(0.0, 0.5 * cap - 0.5 * depth * cap) - 1e-12);
                    EXPECT_LE(e, std::min(cap, 0.5 * cap + 0.5 * depth * cap) + 1e-12);
                }
                for (double p : out.profile.power_mw) EXPECT_LE(std::abs(p), params.power_mw);
            }
        }
    }
}

TEST(Simulate, DegradationFallsAndRevenueRisesWithBand) {
    const BatteryParams params;
    const StressFunction phi;
    PolicyParams policy;
    for (std::uint64_t seed : {5u, 6u}) {
        const RegulationDay d = random_day(seed);
        double prev_deg = 1.0;
        for (int k = 0; k <= 40; ++k) {
            const double c = std::pow(10.0, 3.0 + 0.1 * k);
            const double u = soc_band(policy, phi, c);
            const auto out = simulate_day(d, 1.0, u, params);
            const double deg = daily_cycle_degradation(out.profile, params);
            EXPECT_LE(deg, prev_deg + 1e-15) << "C " << c;
            prev_deg = deg;
        }
        double prev_rev = -1.0;
        for (int k = 0; k <= 20; ++k) {
            const auto out = simulate_day(d, 1.0, k / 20.0, params);
            EXPECT_GE(out.revenue, prev_rev - 1e-9) << "depth " << k / 20.0;
            prev_rev = out.revenue;
        }
    }
}

TEST(Simulate, RejectsInvalidDays) {
    const BatteryParams params;
    RegulationDay d = flat_day(0.0);
    d.signal[5] = 1.5;
    EXPECT_THROW(simulate_day(d, 1.0, 0.5, params), std::invalid_argument);
    d = flat_day(0.0);
    d.capacity_mw = 0.7;
    EXPECT_THROW(simulate_day(d, 1.0, 0.5, params), std::invalid_argument);
    d = flat_day(0.0);
    d.signal.pop_back();
    EXPECT_THROW(simulate_day(d, 1.0, 0.5, params), std::invalid_argument);
    EXPECT_THROW(simulate_day(flat_day(0.0), 1.0, 1.5, params), std::invalid_argument);
}
