#include "batval/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace batval {

namespace {

constexpr double kGridSlack = 1e-9;

double intersect(const ConcaveCuts::Line& a, const ConcaveCuts::Line& b) {
    return (b.intercept - a.intercept) / (a.slope - b.slope);
}

}  // namespace

SohGrid SohGrid::uniform(double rated_mwh, double eol_fraction, double step_fraction) {
    if (!(rated_mwh > 0.0)) throw std::invalid_argument("rated capacity must be positive");
    if (!(eol_fraction > 0.0 && eol_fraction < 1.0)) {
        throw std::invalid_argument("end-of-life fraction must lie in (0, 1)");
    }
    if (!(step_fraction > 0.0)) throw std::invalid_argument("SoH step must be positive");
    const double span = 1.0 - eol_fraction;
    const double steps = std::round(span / step_fraction);
    if (steps < 1.0 || std::abs(steps * step_fraction - span) > kGridSlack) {
        throw std::invalid_argument("SoH span is not a whole number of grid steps");
    }
    SohGrid grid;
    grid.rated_mwh = rated_mwh;
    const auto count = static_cast<std::size_t>(steps) + 1;
    grid.capacity_mwh.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        grid.capacity_mwh[i] = rated_mwh * (1.0 - static_cast<double>(i) * step_fraction);
    }
    return grid;
}

double SohGrid::soh_pct(std::size_t i) const {
    const double pct = 100.0 * capacity_mwh.at(i) / rated_mwh;
    return std::round(pct * 1e6) / 1e6;
}

void SohGrid::validate() const {
    if (capacity_mwh.size() < 2) throw std::invalid_argument("SoH grid needs at least two samples");
    for (std::size_t i = 1; i < capacity_mwh.size(); ++i) {
        if (!(capacity_mwh[i] < capacity_mwh[i - 1])) {
            throw std::invalid_argument("SoH grid must be strictly decreasing");
        }
    }
    if (capacity_mwh.back() <= 0.0) throw std::invalid_argument("SoH grid must stay positive");
}

ValueSurface::ValueSurface(SohGrid grid, std::size_t horizon_days)
    : grid_(std::move(grid)), horizon_(horizon_days) {
    grid_.validate();
    if (horizon_ < 1) throw std::invalid_argument("horizon must be at least one day");
    values_.assign(grid_.size() * (horizon_ + 1), 0.0);
}

std::size_t ValueSurface::offset(std::size_t day) const {
    if (day < 1 || day > horizon_ + 1) {
        throw std::out_of_range("day " + std::to_string(day) + " outside 1.." +
                                std::to_string(horizon_ + 1));
    }
    return (day - 1) * grid_.size();
}

double ValueSurface::value(std::size_t i, std::size_t day) const {
    if (i >= grid_.size()) throw std::out_of_range("SoH sample index out of range");
    return values_[offset(day) + i];
}

void ValueSurface::set(std::size_t i, std::size_t day, double v) {
    if (i >= grid_.size()) throw std::out_of_range("SoH sample index out of range");
    values_[offset(day) + i] = v;
}

std::span<const double> ValueSurface::column(std::size_t day) const {
    return {values_.data() + offset(day), grid_.size()};
}

std::span<double> ValueSurface::column(std::size_t day) {
    return {values_.data() + offset(day), grid_.size()};
}

ConcaveCuts::ConcaveCuts(std::vector<Line> lines) {
    // Lower envelope of lines: slope decreasing left to right.
    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
        return a.slope != b.slope ? a.slope > b.slope : a.intercept < b.intercept;
    });
    for (const Line& line : lines) {
        if (!hull_.empty() && hull_.back().slope == line.slope) continue;
        while (hull_.size() >= 2 &&
               intersect(hull_[hull_.size() - 2], line) <=
                   intersect(hull_[hull_.size() - 2], hull_.back())) {
            hull_.pop_back();
        }
        hull_.push_back(line);
    }
    for (std::size_t k = 1; k < hull_.size(); ++k) {
        breaks_.push_back(intersect(hull_[k - 1], hull_[k]));
    }
}

ConcaveCuts ConcaveCuts::from_samples(std::span<const double> capacity,
                                      std::span<const double> values) {
    if (capacity.size() != values.size() || capacity.size() < 2) {
        throw std::invalid_argument("cut model needs matching sample arrays of length >= 2");
    }
    std::vector<Line> lines;
    lines.reserve(capacity.size() - 1);
    for (std::size_t i = 0; i + 1 < capacity.size(); ++i) {
        const double width = capacity[i] - capacity[i + 1];
        if (!(width > 0.0)) throw std::invalid_argument("cut samples must be strictly decreasing");
        const double slope = (values[i] - values[i + 1]) / width;
        lines.push_back({slope, values[i] - slope * capacity[i]});
    }
    return ConcaveCuts(std::move(lines));
}

double ConcaveCuts::operator()(double x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const Line& line : hull_) best = std::min(best, line.at(x));
    return best;
}

double ConcaveCuts::left_slope(double x) const {
    if (hull_.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(
        std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
    return hull_[k].slope;
}

ConcaveCuts cuts_for_day(const ValueSurface& surface, std::size_t day) {
    return ConcaveCuts::from_samples(surface.grid().capacity_mwh, surface.column(day));
}

double evaluate(const ValueSurface& surface, std::size_t day, double capacity_mwh) {
    const auto& caps = surface.grid().capacity_mwh;
    const double tol = kGridSlack * caps.front();
    if (!(capacity_mwh <= caps.front() + tol && capacity_mwh >= caps.back() - tol)) {
        throw std::domain_error("capacity outside the SoH grid span");
    }
    return cuts_for_day(surface, day)(capacity_mwh);
}

double evaluate_clamped(const ValueSurface& surface, std::size_t day, double capacity_mwh) {
    const auto& caps = surface.grid().capacity_mwh;
    if (capacity_mwh < caps.back()) return 0.0;
    return evaluate(surface, day, std::min(capacity_mwh, caps.front()));
}

double marginal_cost(const ValueSurface& surface, std::size_t i, std::size_t day) {
    if (i + 1 >= surface.samples()) {
        throw std::out_of_range("marginal cost undefined at the end-of-life sample");
    }
    if (day < 1 || day > surface.horizon()) {
        throw std::out_of_range("marginal cost needs day in 1..N");
    }
    const auto next = surface.column(day + 1);
    const auto& caps = surface.grid().capacity_mwh;
    return (next[i] - next[i + 1]) / (caps[i] - caps[i + 1]);
}

double ResaleCurve::value(double capacity_mwh, double rated_mwh) const {
    const double floor = warranty_threshold * rated_mwh;
    if (capacity_mwh < floor) return 0.0;
    const double prorate = (capacity_mwh - floor) / ((1.0 - warranty_threshold) * rated_mwh);
    return base_price_usd_per_kwh * 1000.0 * rated_mwh * prorate * (capacity_mwh / rated_mwh);
}

std::vector<double> upper_concave_envelope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("envelope needs matching arrays");
    const std::size_t n = x.size();
    if (n <= 2) return {y.begin(), y.end()};

    // Work in increasing x.
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = x[0] < x[n - 1] ? k : n - 1 - k;

    std::vector<std::size_t> hull;
    for (std::size_t k : order) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2];
            const std::size_t b = hull.back();
            // Drop b when it lies on or below the chord a -> k.
            const double cross = (x[b] - x[a]) * (y[k] - y[a]) - (y[b] - y[a]) * (x[k] - x[a]);
            if (cross < 0.0) break;
            hull.pop_back();
        }
        hull.push_back(k);
    }

    std::vector<double> out(y.begin(), y.end());
    for (std::size_t h = 1; h < hull.size(); ++h) {
        const std::size_t a = hull[h - 1];
        const std::size_t b = hull[h];
        const std::size_t lo = std::min(a, b);
        const std::size_t hi = std::max(a, b);
        for (std::size_t k = lo + 1; k < hi; ++k) {
            const double w = (x[k] - x[a]) / (x[b] - x[a]);
            out[k] = std::max(y[k], y[a] + w * (y[b] - y[a]));
        }
    }
    return out;
}

void apply_resale_overlay(ValueSurface& surface, std::size_t day, const ResaleCurve& curve) {
    const auto& caps = surface.grid().capacity_mwh;
    const double rated = surface.grid().rated_mwh;
    auto col = surface.column(day);
    bool raised = false;
    for (std::size_t i = 0; i < col.size(); ++i) {
        const double resale = curve.value(caps[i], rated);
        if (resale > col[i]) {
            col[i] = resale;
            raised = true;
        }
    }
    if (!raised) return;
    const std::vector<double> hull = upper_concave_envelope(caps, col);
    std::copy(hull.begin(), hull.end(), col.begin());
}

std::vector<SurfaceViolation> check_surface(const ValueSurface& surface, double rel_tol) {
    std::vector<SurfaceViolation> found;
    const auto& grid = surface.grid();
    const auto& caps = grid.capacity_mwh;
    const std::size_t I = surface.samples();
    for (std::size_t day = 1; day <= surface.horizon() + 1; ++day) {
        const auto v = surface.column(day);
        double scale = 0.0;
        for (double x : v) scale = std::max(scale, std::abs(x));
        const double abs_tol = 1e-9 * std::max(scale, 1.0);

        for (std::size_t i = 0; i < I; ++i) {
            if (!std::isfinite(v[i])) found.push_back({day, grid.soh_pct(i), "non-finite"});
            else if (v[i] < -abs_tol) found.push_back({day, grid.soh_pct(i), "negative"});
        }
        if (std::abs(v[I - 1]) > abs_tol) {
            found.push_back({day, grid.soh_pct(I - 1), "nonzero end-of-life value"});
        }
        for (std::size_t i = 0; i + 1 < I; ++i) {
            if (v[i + 1] > v[i] + abs_tol) {
                found.push_back({day, grid.soh_pct(i + 1), "not monotone in SoH"});
            }
        }
        for (std::size_t i = 0; i + 2 < I; ++i) {
            const double upper = (v[i] - v[i + 1]) / (caps[i] - caps[i + 1]);
            const double lower = (v[i + 1] - v[i + 2]) / (caps[i + 1] - caps[i + 2]);
            const double tol = rel_tol * std::max(std::abs(upper), std::abs(lower)) + 1e-9;
            if (upper > lower + tol) found.push_back({day, grid.soh_pct(i + 1), "not concave"});
        }
    }
    return found;
}

}  // namespace batval
