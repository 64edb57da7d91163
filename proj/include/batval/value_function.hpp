#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace batval {

/// Capacity sample points, strictly decreasing from the rated capacity down
/// to the end-of-life capacity.
struct SohGrid {
    double rated_mwh = 1.0;
    std::vector<double> capacity_mwh;

    /// Samples every `step_fraction` of rated capacity from 100% down to
    /// `eol_fraction`. The span must be a whole number of steps.
    static SohGrid uniform(double rated_mwh, double eol_fraction, double step_fraction = 0.01);

    [[nodiscard]] std::size_t size() const { return capacity_mwh.size(); }
    [[nodiscard]] double soh_pct(std::size_t i) const;
    void validate() const;

    friend bool operator==(const SohGrid&, const SohGrid&) = default;
};

/// Value-to-go samples v[i][day] for every SoH sample i (0-based) and day
/// 1..N+1, where day N+1 holds the terminal condition.
class ValueSurface {
public:
    ValueSurface() = default;
    ValueSurface(SohGrid grid, std::size_t horizon_days);

    [[nodiscard]] const SohGrid& grid() const { return grid_; }
    [[nodiscard]] std::size_t samples() const { return grid_.size(); }
    [[nodiscard]] std::size_t horizon() const { return horizon_; }

    [[nodiscard]] double value(std::size_t i, std::size_t day) const;
    void set(std::size_t i, std::size_t day, double v);

    [[nodiscard]] std::span<const double> column(std::size_t day) const;
    [[nodiscard]] std::span<double> column(std::size_t day);

    friend bool operator==(const ValueSurface&, const ValueSurface&) = default;

private:
    [[nodiscard]] std::size_t offset(std::size_t day) const;

    SohGrid grid_;
    std::size_t horizon_ = 0;
    std::vector<double> values_;
};

/// Pointwise minimum of lines. Built from samples it is the concave
/// piecewise-linear cut model: one line per pair of neighbouring samples.
class ConcaveCuts {
public:
    struct Line {
        double slope = 0.0;
        double intercept = 0.0;
        [[nodiscard]] double at(double x) const { return intercept + slope * x; }
    };

    ConcaveCuts() = default;
    explicit ConcaveCuts(std::vector<Line> lines);

    /// `capacity` strictly decreasing, at least two samples.
    static ConcaveCuts from_samples(std::span<const double> capacity, std::span<const double> values);

    [[nodiscard]] double operator()(double x) const;

    /// Slope of the active piece immediately to the left of x.
    [[nodiscard]] double left_slope(double x) const;

    /// Abscissae where the active line changes, increasing.
    [[nodiscard]] const std::vector<double>& breakpoints() const { return breaks_; }
    [[nodiscard]] const std::vector<Line>& envelope() const { return hull_; }
    [[nodiscard]] bool empty() const { return hull_.empty(); }

private:
    std::vector<Line> hull_;     // active lines, slope decreasing
    std::vector<double> breaks_; // breaks_[k] separates hull_[k] and hull_[k+1]
};

/// Cut model of the column for `day`.
ConcaveCuts cuts_for_day(const ValueSurface& surface, std::size_t day);

/// Minimum over the linear extensions of every segment of the column.
/// Throws std::domain_error when E lies outside the grid span.
double evaluate(const ValueSurface& surface, std::size_t day, double capacity_mwh);

/// As `evaluate`, but capacities below the last sample map to zero.
double evaluate_clamped(const ValueSurface& surface, std::size_t day, double capacity_mwh);

/// C_{i,day}: slope of the next day's values toward the more degraded
/// neighbour, in $ per MWh of capacity. Throws std::out_of_range for the last
/// sample or day > N.
double marginal_cost(const ValueSurface& surface, std::size_t i, std::size_t day);

/// Prorated resale value of a battery still under warranty.
struct ResaleCurve {
    double base_price_usd_per_kwh = 200.0;
    double warranty_threshold = 0.8;

    [[nodiscard]] double value(double capacity_mwh, double rated_mwh) const;
};

/// Upper concave envelope of the points (x, y) with x strictly monotone,
/// evaluated back at every x.
std::vector<double> upper_concave_envelope(std::span<const double> x, std::span<const double> y);

/// v[i][day] <- max(v[i][day], S(E_i)), then restores concavity with the
/// upper concave envelope if the max broke it.
void apply_resale_overlay(ValueSurface& surface, std::size_t day, const ResaleCurve& curve);

struct SurfaceViolation {
    std::size_t day = 0;
    double soh_pct = 0.0;
    std::string kind;
};

/// Checks every column for non-negativity, monotonicity in SoH, a zero last
/// sample and concavity (neighbouring slopes within `rel_tol`).
std::vector<SurfaceViolation> check_surface(const ValueSurface& surface, double rel_tol = 1e-6);

}  // namespace batval
