#include "batval/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "batval/battery.hpp"

namespace batval {

namespace {

// SoC fractions computed from MWh states may overshoot [0, 1] by rounding.
constexpr double kFractionSlack = 1e-9;

}  // namespace

void StressFunction::validate() const {
    if (!(coefficient > 0.0)) throw std::invalid_argument("stress coefficient must be positive");
    if (!(exponent > 1.0)) throw std::invalid_argument("stress exponent must exceed 1");
}

double StressFunction::stress(double depth) const {
    if (!(depth >= 0.0 && depth <= 1.0)) {
        throw std::domain_error("cycle depth outside [0, 1]: " + std::to_string(depth));
    }
    if (depth == 0.0) return 0.0;
    return coefficient * std::pow(depth, exponent);
}

double StressFunction::derivative(double depth) const {
    if (!(depth > 0.0 && depth <= 1.0)) {
        throw std::domain_error("stress derivative needs depth in (0, 1]: " + std::to_string(depth));
    }
    return coefficient * exponent * std::pow(depth, exponent - 1.0);
}

double StressFunction::derivative_inverse(double marginal) const {
    if (!(marginal > 0.0)) {
        throw std::domain_error("stress derivative inverse needs a positive argument");
    }
    const double at_full = coefficient * exponent;
    if (marginal >= at_full) return 1.0;
    const double depth = std::pow(marginal / at_full, 1.0 / (exponent - 1.0));
    if (!(depth >= std::numeric_limits<double>::min())) return 0.0;
    return std::min(depth, 1.0);
}

std::vector<double> turning_points(std::span<const double> series) {
    std::vector<double> points;
    if (series.empty()) return points;
    points.reserve(series.size());
    points.push_back(series.front());
    int direction = 0;
    for (std::size_t k = 1; k < series.size(); ++k) {
        const double value = series[k];
        const double last = points.back();
        if (value == last) continue;
        const int step = value > last ? 1 : -1;
        // Still moving the same way: the extreme so far is not a reversal.
        if (step == direction) points.back() = value;
        else points.push_back(value);
        direction = step;
    }
    return points;
}

CycleSet rainflow(std::span<const double> soc_fraction) {
    if (soc_fraction.size() < 2) {
        throw std::invalid_argument("rainflow needs at least two samples");
    }
    for (double v : soc_fraction) {
        if (!(v >= -kFractionSlack && v <= 1.0 + kFractionSlack)) {
            throw std::invalid_argument("rainflow input outside [0, 1]: " + std::to_string(v));
        }
    }

    const std::vector<double> points = turning_points(soc_fraction);
    CycleSet cycles;
    std::vector<double> stack;
    stack.reserve(points.size());
    for (double p : points) {
        stack.push_back(p);
        while (stack.size() >= 4) {
            const std::size_t n = stack.size();
            const double inner = std::abs(stack[n - 2] - stack[n - 3]);
            const double before = std::abs(stack[n - 3] - stack[n - 4]);
            const double after = std::abs(stack[n - 1] - stack[n - 2]);
            if (inner > before || inner > after) break;
            cycles.push_back({std::clamp(inner, 0.0, 1.0), 1.0});
            stack.erase(stack.end() - 3, stack.end() - 1);
        }
    }
    for (std::size_t k = 1; k < stack.size(); ++k) {
        cycles.push_back({std::clamp(std::abs(stack[k] - stack[k - 1]), 0.0, 1.0), 0.5});
    }
    return cycles;
}

double cycle_degradation(const CycleSet& cycles, const StressFunction& stress) {
    double total = 0.0;
    for (const Cycle& c : cycles) total += c.weight * stress.stress(c.depth);
    return total;
}

double rainflow_degradation(std::span<const double> soc_fraction, const StressFunction& stress) {
    return cycle_degradation(rainflow(soc_fraction), stress);
}

void CalendarModel::validate() const {
    if (!(eol_fraction_at_shelf_end >= 0.0)) {
        throw std::invalid_argument("calendar fade fraction must be non-negative");
    }
    if (!(shelf_life_days > 0.0)) throw std::invalid_argument("shelf life must be positive");
}

double CalendarModel::daily_rate() const {
    validate();
    return eol_fraction_at_shelf_end / shelf_life_days;
}

double LinearizedStress::total_energy() const {
    return std::accumulate(segment_energy.begin(), segment_energy.end(), 0.0);
}

LinearizedStress linearize_stress(const StressFunction& stress, int segments, double efficiency,
                                  double capacity_mwh) {
    if (segments < 1) throw std::domain_error("segment count must be at least 1");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) {
        throw std::domain_error("efficiency must lie in (0, 1]");
    }
    if (!(capacity_mwh > 0.0)) throw std::domain_error("capacity must be positive");

    const auto count = static_cast<std::size_t>(segments);
    const double J = static_cast<double>(segments);
    LinearizedStress model;
    model.slopes.resize(count);
    model.segment_energy.assign(count, capacity_mwh / J);
    for (std::size_t j = 0; j < count; ++j) {
        const double upper = static_cast<double>(j + 1) / J;
        const double lower = static_cast<double>(j) / J;
        model.slopes[j] = J / (efficiency * capacity_mwh) *
                          (stress.stress(std::min(upper, 1.0)) - stress.stress(lower));
    }
    return model;
}

std::vector<double> initial_segment_fill(const LinearizedStress& model, double stored_mwh) {
    std::vector<double> fill(model.segments(), 0.0);
    double remaining = std::max(stored_mwh, 0.0);
    for (std::size_t j = 0; j < fill.size() && remaining > 0.0; ++j) {
        fill[j] = std::min(model.segment_energy[j], remaining);
        remaining -= fill[j];
    }
    return fill;
}

double segment_degradation(std::span<const double> soc_mwh, const LinearizedStress& model,
                           double efficiency) {
    if (soc_mwh.empty()) return 0.0;
    std::vector<double> level = initial_segment_fill(model, soc_mwh.front());
    double total = 0.0;
    for (std::size_t t = 1; t < soc_mwh.size(); ++t) {
        double change = soc_mwh[t] - soc_mwh[t - 1];
        if (change < 0.0) {
            double need = -change;
            for (std::size_t j = 0; j < level.size() && need > 0.0; ++j) {
                const double take = std::min(level[j], need);
                level[j] -= take;
                need -= take;
                // Terminal output is efficiency * stored drain.
                total += model.slopes[j] * efficiency * take;
            }
        } else if (change > 0.0) {
            for (std::size_t j = 0; j < level.size() && change > 0.0; ++j) {
                const double put = std::min(model.segment_energy[j] - level[j], change);
                level[j] += put;
                change -= put;
            }
        }
    }
    return total;
}

double BatteryParams::efficiency() const { return std::sqrt(round_trip_efficiency); }

void BatteryParams::validate() const {
    if (!(power_mw > 0.0)) throw std::invalid_argument("battery power must be positive");
    if (!(energy_mwh > 0.0)) throw std::invalid_argument("battery energy must be positive");
    if (!(round_trip_efficiency > 0.0 && round_trip_efficiency <= 1.0)) {
        throw std::invalid_argument("round-trip efficiency must lie in (0, 1]");
    }
    if (!(eol_threshold > 0.0 && eol_threshold < 1.0)) {
        throw std::invalid_argument("end-of-life threshold must lie in (0, 1)");
    }
    if (!(warranty_threshold > 0.0 && warranty_threshold < 1.0)) {
        throw std::invalid_argument("warranty threshold must lie in (0, 1)");
    }
    if (!(pack_price_usd_per_kwh >= 0.0)) throw std::invalid_argument("pack price must be >= 0");
    stress.validate();
    calendar.validate();
}

std::vector<double> DispatchProfile::soc_fraction() const {
    std::vector<double> out(soc_mwh.size());
    std::transform(soc_mwh.begin(), soc_mwh.end(), out.begin(), [this](double e) {
        return std::clamp(e / capacity_mwh, 0.0, 1.0);
    });
    return out;
}

double daily_cycle_degradation(const DispatchProfile& profile, const BatteryParams& params) {
    if (profile.soc_mwh.size() < 2) return 0.0;
    return rainflow_degradation(profile.soc_fraction(), params.stress);
}

}  // namespace batval
