#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace batval {

/// Cycle-depth stress function Phi(u) = coefficient * u^exponent.
///
/// Phi(u) is the fraction of rated capacity lost by one full cycle of depth u
/// (u measured as a fraction of the current usable capacity). The defaults
/// describe an NMC 18650 cell rated for 1000 cycles at 80% depth.
struct StressFunction {
    double coefficient = 3.14e-4;
    double exponent = 2.03;

    /// Throws std::invalid_argument unless coefficient > 0 and exponent > 1.
    void validate() const;

    /// Phi(u); std::domain_error outside [0, 1].
    [[nodiscard]] double stress(double depth) const;

    /// phi(x) = dPhi/dx; std::domain_error outside (0, 1].
    [[nodiscard]] double derivative(double depth) const;

    /// Inverse of phi. Returns 1 when `marginal` exceeds phi(1) and 0 when the
    /// solution underflows the smallest representable depth.
    /// std::domain_error when marginal <= 0.
    [[nodiscard]] double derivative_inverse(double marginal) const;
};

/// One Rainflow cycle. Weight is 1.0 for a full cycle, 0.5 for a residual half.
struct Cycle {
    double depth = 0.0;
    double weight = 1.0;

    friend bool operator==(const Cycle&, const Cycle&) = default;
};

using CycleSet = std::vector<Cycle>;

/// Reduces a series to its reversal points. Plateaus collapse to their first
/// sample and both end points are kept. A constant series yields one point.
std::vector<double> turning_points(std::span<const double> series);

/// Four-point Rainflow count on a SoC trajectory (fractions of capacity).
/// Full cycles come out in extraction order, followed by the residual half
/// cycles in trajectory order.
/// Throws std::invalid_argument for fewer than two samples or values outside [0, 1].
CycleSet rainflow(std::span<const double> soc_fraction);

/// Sum of weight * Phi(depth).
double cycle_degradation(const CycleSet& cycles, const StressFunction& stress);

/// Rainflow degradation of a SoC trajectory given as fractions of capacity.
double rainflow_degradation(std::span<const double> soc_fraction, const StressFunction& stress);

/// Calendar ageing: a linear fade reaching `eol_fraction_at_shelf_end` after
/// `shelf_life_days`.
struct CalendarModel {
    double eol_fraction_at_shelf_end = 0.2;
    double shelf_life_days = 1825.0;

    void validate() const;
    [[nodiscard]] double daily_rate() const;
};

/// Piecewise-linear cycle-depth model used inside the arbitrage optimizer.
///
/// Segment j covers depths ((j-1)/J, j/J]. `slopes[j]` is the capacity-loss
/// fraction per MWh discharged at the terminals from that segment and
/// `segment_energy[j]` is its stored-energy width (E_n / J).
struct LinearizedStress {
    std::vector<double> slopes;
    std::vector<double> segment_energy;

    [[nodiscard]] std::size_t segments() const { return slopes.size(); }
    [[nodiscard]] double total_energy() const;
};

/// Builds J segments for single-trip efficiency `efficiency` and current
/// usable capacity `capacity_mwh`.
LinearizedStress linearize_stress(const StressFunction& stress, int segments, double efficiency,
                                  double capacity_mwh);

/// Segment-model degradation of a stored-energy trajectory (MWh, including
/// the initial point), with segments filled and drained cheapest first.
/// This is the smallest segment-decomposed degradation consistent with the
/// trajectory.
double segment_degradation(std::span<const double> soc_mwh, const LinearizedStress& model,
                           double efficiency);

/// Initial per-segment stored energy for `stored_mwh`, cheapest segments full first.
std::vector<double> initial_segment_fill(const LinearizedStress& model, double stored_mwh);

}  // namespace batval
