#include "batval/regulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace batval {

std::size_t RegulationDay::ticks_per_hour() const {
    return static_cast<std::size_t>(std::lround(3600.0 / tick_seconds));
}

void RegulationDay::validate(double max_power_mw) const {
    if (!(tick_seconds > 0.0)) throw std::invalid_argument("tick length must be positive");
    const double per_hour = 3600.0 / tick_seconds;
    if (std::abs(per_hour - std::round(per_hour)) > 1e-9) {
        throw std::invalid_argument("tick length must divide an hour");
    }
    if (signal.size() != 24 * ticks_per_hour()) {
        throw std::invalid_argument("regulation signal must cover exactly 24 hours");
    }
    for (double r : signal) {
        if (!(std::abs(r) <= 1.0)) throw std::invalid_argument("regulation signal outside [-1, 1]");
    }
    if (hourly_price.size() != 24) throw std::invalid_argument("need 24 hourly regulation prices");
    for (double p : hourly_price) {
        if (!std::isfinite(p)) throw std::invalid_argument("regulation prices must be finite");
    }
    if (!(capacity_mw > 0.0 && capacity_mw <= max_power_mw)) {
        throw std::invalid_argument("offered capacity must lie in (0, P]");
    }
}

void PolicyParams::validate() const {
    if (!(expected_price > 0.0)) throw std::invalid_argument("expected price must be positive");
    if (!(expected_signal_energy > 0.0)) {
        throw std::invalid_argument("expected signal energy must be positive");
    }
    if (!(mileage_ratio > 0.0)) throw std::invalid_argument("mileage ratio must be positive");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) {
        throw std::invalid_argument("efficiency must lie in (0, 1]");
    }
}

double PolicyParams::pi() const {
    return (2.0 / 3.0) * expected_price / (expected_signal_energy * mileage_ratio);
}

double soc_band(const PolicyParams& policy, const StressFunction& stress, double marginal_cost) {
    policy.validate();
    if (marginal_cost < 0.0 || std::isnan(marginal_cost)) {
        throw std::domain_error("marginal degradation cost must be non-negative");
    }
    if (marginal_cost == 0.0) return 1.0;
    const double eta = policy.efficiency;
    const double arg = (eta * eta + 1.0) / (eta * marginal_cost) * policy.pi();
    if (!(arg > 0.0)) return 0.0;
    return std::clamp(stress.derivative_inverse(arg), 0.0, 1.0);
}

PerformanceScore performance_score(std::span<const double> response,
                                   std::span<const double> instruction, double capacity_mw) {
    if (response.size() != instruction.size()) {
        throw std::invalid_argument("response and instruction lengths differ");
    }
    if (response.size() < 2) throw std::invalid_argument("score needs at least two samples");
    const std::size_t n = response.size();
    PerformanceScore s;

    double err = 0.0;
    double ref = 0.0;
    double mp = 0.0;
    double mr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double target = instruction[k] * capacity_mw;
        err += std::abs(response[k] - target);
        ref += std::abs(target);
        mp += response[k];
        mr += target;
    }
    s.accuracy = ref == 0.0 ? 1.0 : std::max(0.0, 1.0 - err / ref);

    mp /= static_cast<double>(n);
    mr /= static_cast<double>(n);
    double spp = 0.0;
    double srr = 0.0;
    double spr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double a = response[k] - mp;
        const double b = instruction[k] * capacity_mw - mr;
        spp += a * a;
        srr += b * b;
        spr += a * b;
    }
    // A constant series has no correlation. Both constant counts as a match.
    const bool flat_p = spp == 0.0;
    const bool flat_r = srr == 0.0;
    if (flat_p && flat_r) s.correlation = 1.0;
    else if (flat_p || flat_r) s.correlation = 0.0;
    else s.correlation = std::clamp(spr / std::sqrt(spp * srr), 0.0, 1.0);

    s.delay = 1.0;
    return s;
}

RegulationOutcome simulate_day(const RegulationDay& day, double capacity_mwh, double depth,
                               const BatteryParams& params, double initial_soc_fraction) {
    params.validate();
    day.validate(params.power_mw);
    if (!(capacity_mwh > 0.0)) throw std::invalid_argument("capacity must be positive");
    if (!(depth >= 0.0 && depth <= 1.0)) throw std::invalid_argument("band depth outside [0, 1]");
    if (!(initial_soc_fraction >= 0.0 && initial_soc_fraction <= 1.0)) {
        throw std::invalid_argument("initial SoC fraction must lie in [0, 1]");
    }

    const double eta = params.efficiency();
    const double P = params.power_mw;
    const double B = day.capacity_mw;
    const double dt = day.tick_seconds / 3600.0;
    const double mid = initial_soc_fraction * capacity_mwh;
    const double lo = std::max(0.0, mid - 0.5 * depth * capacity_mwh);
    const double hi = std::min(capacity_mwh, mid + 0.5 * depth * capacity_mwh);

    RegulationOutcome out;
    out.profile.step_hours = dt;
    out.profile.capacity_mwh = capacity_mwh;
    out.profile.power_mw.resize(day.signal.size());
    out.profile.soc_mwh.resize(day.signal.size() + 1);
    double e = mid;
    out.profile.soc_mwh[0] = e;
    for (std::size_t k = 0; k < day.signal.size(); ++k) {
        double p = std::clamp(day.signal[k] * B, -P, P);
        if (p > 0.0) {
            p = std::min(p, std::max(0.0, eta * (e - lo) / dt));
            e = std::max(lo, e - p * dt / eta);
        } else if (p < 0.0) {
            p = std::max(p, -std::max(0.0, (hi - e) / (eta * dt)));
            e = std::min(hi, e - p * dt * eta);
        }
        out.profile.power_mw[k] = p;
        out.profile.soc_mwh[k + 1] = e;
    }

    const std::size_t per_hour = day.ticks_per_hour();
    out.hourly_score.resize(24);
    for (std::size_t h = 0; h < 24; ++h) {
        const std::span<const double> resp(out.profile.power_mw.data() + h * per_hour, per_hour);
        const std::span<const double> instr(day.signal.data() + h * per_hour, per_hour);
        const double rho = performance_score(resp, instr, B).total();
        out.hourly_score[h] = rho;
        out.revenue += rho * day.hourly_price[h] * B;
    }
    return out;
}

}  // namespace batval
