#pragma once

// Brute-force references for the daily arbitrage problem.
//
// pareto_frontier enumerates every segment-SoC state on a 0.001 MWh
// lattice and carries, per state, the Pareto set of (revenue, cycle degradation)
// pairs, trimmed to its upper concave hull. The best end-of-day value is then taken over the convex
// hull of the final Pareto set: the flow polytope has lattice vertices when
// all capacities are lattice multiples, so the hull is exactly the set of
// attainable (revenue, degradation) pairs of the continuous problem.
//
// aggregate_revenue is a plain SoC-lattice DP without degradation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

struct ToyDay {
    std::vector<double> prices;
    double step_hours = 1.0;
    double power_mw = 0.0;
    double efficiency = 1.0;                  // single trip
    std::vector<int> segment_units;           // segment widths in lattice units
    std::vector<double> slopes;               // per MWh discharged at the terminals
    std::vector<int> initial_units;           // starting fill per segment
    double unit = 0.001;
};

struct RD {
    double revenue;
    double degradation;
};

inline std::vector<RD> hull_prune(std::vector<RD> v) {
    std::sort(v.begin(), v.end(), [](const RD& a, const RD& b) {
        return a.degradation != b.degradation ? a.degradation < b.degradation : a.revenue > b.revenue;
    });
    std::vector<RD> front;
    double best = -std::numeric_limits<double>::infinity();
    for (const RD& p : v) {
        if (p.revenue > best + 1e-12) {
            front.push_back(p);
            best = p.revenue;
        }
    }
    // Only the upper concave hull can matter: the final answer is a maximum
    // over convex combinations, and hulls commute with adding a fixed step.
    std::vector<RD> hull;
    for (const RD& p : front) {
        while (hull.size() >= 2) {
            const RD& a = hull[hull.size() - 2];
            const RD& b = hull.back();
            const double cross = (b.degradation - a.degradation) * (p.revenue - a.revenue) -
                                 (b.revenue - a.revenue) * (p.degradation - a.degradation);
            if (cross < 0.0) break;
            hull.pop_back();
        }
        hull.push_back(p);
    }
    return hull;
}

// Upper hull of the Pareto set of (revenue, D) over all feasible days ending with at least the
// starting energy.
inline std::vector<RD> pareto_frontier(const ToyDay& day) {
    const std::size_t J = day.segment_units.size();
    std::vector<int> radix(J);
    std::size_t states = 1;
    for (std::size_t j = 0; j < J; ++j) {
        radix[j] = day.segment_units[j] + 1;
        states *= static_cast<std::size_t>(radix[j]);
    }
    auto decode = [&](std::size_t s) {
        std::vector<int> lv(J);
        for (std::size_t j = 0; j < J; ++j) {
            lv[j] = static_cast<int>(s % static_cast<std::size_t>(radix[j]));
            s /= static_cast<std::size_t>(radix[j]);
        }
        return lv;
    };
    std::vector<std::vector<int>> levels(states);
    for (std::size_t s = 0; s < states; ++s) levels[s] = decode(s);

    std::size_t start = 0;
    for (std::size_t j = J; j-- > 0;) start = start * static_cast<std::size_t>(radix[j]) + static_cast<std::size_t>(day.initial_units[j]);
    int start_total = 0;
    for (int x : day.initial_units) start_total += x;

    const double eta = day.efficiency;
    const double u = day.unit;
    const double M = day.step_hours;
    const double tol = 1e-9;
    std::vector<std::vector<RD>> cur(states), next(states);
    cur[start].push_back({0.0, 0.0});
    for (double price : day.prices) {
        for (auto& v : next) v.clear();
        for (std::size_t s = 0; s < states; ++s) {
            if (cur[s].empty()) continue;
            for (std::size_t s2 = 0; s2 < states; ++s2) {
                int charge = 0;
                int drain = 0;
                double deg = 0.0;
                for (std::size_t j = 0; j < J; ++j) {
                    const int d = levels[s2][j] - levels[s][j];
                    if (d > 0) charge += d;
                    else {
                        drain -= d;
                        deg += day.slopes[j] * eta * (-d) * u;
                    }
                }
                if (charge * u / (eta * M) > day.power_mw + tol) continue;
                if (drain * u * eta / M > day.power_mw + tol) continue;
                if (price < 0.0 && drain > 0) continue;
                const double rev = price * (eta * drain * u - charge * u / eta);
                for (const RD& p : cur[s]) next[s2].push_back({p.revenue + rev, p.degradation + deg});
            }
        }
        for (std::size_t s = 0; s < states; ++s) next[s] = hull_prune(std::move(next[s]));
        std::swap(cur, next);
    }
    std::vector<RD> all;
    for (std::size_t s = 0; s < states; ++s) {
        int total = 0;
        for (int x : levels[s]) total += x;
        if (total < start_total) continue;
        all.insert(all.end(), cur[s].begin(), cur[s].end());
    }
    return hull_prune(std::move(all));
}

// max over the convex hull of `frontier` of revenue + f(D), for concave f
// with the given breakpoints in D.
inline double best_over_hull(const std::vector<RD>& frontier, const std::function<double(double)>& f,
                             const std::vector<double>& f_breaks) {
    double best = -std::numeric_limits<double>::infinity();
    for (const RD& p : frontier) best = std::max(best, p.revenue + f(p.degradation));
    for (std::size_t a = 0; a < frontier.size(); ++a) {
        for (std::size_t b = a + 1; b < frontier.size(); ++b) {
            const RD& p = frontier[a];
            const RD& q = frontier[b];
            const double dd = q.degradation - p.degradation;
            if (dd <= 0.0) continue;
            for (double k : f_breaks) {
                const double th = (k - p.degradation) / dd;
                if (th <= 0.0 || th >= 1.0) continue;
                best = std::max(best, p.revenue + th * (q.revenue - p.revenue) + f(k));
            }
        }
    }
    return best;
}

// Revenue-only SoC lattice DP with `states` levels over [0, capacity].
inline double aggregate_revenue(const std::vector<double>& prices, double step_hours, double power_mw,
                                double efficiency, double capacity_mwh, double initial_mwh,
                                double unit = 0.001) {
    const int K = static_cast<int>(std::lround(capacity_mwh / unit));
    const int k0 = static_cast<int>(std::lround(initial_mwh / unit));
    const double eta = efficiency;
    const int up = static_cast<int>(std::floor(eta * step_hours * power_mw / unit + 1e-9));
    const int down = static_cast<int>(std::floor(step_hours * power_mw / eta / unit + 1e-9));
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> cur(static_cast<std::size_t>(K + 1), ninf), nxt(cur.size());
    cur[static_cast<std::size_t>(k0)] = 0.0;
    for (double price : prices) {
        std::fill(nxt.begin(), nxt.end(), ninf);
        for (int k = 0; k <= K; ++k) {
            const double v = cur[static_cast<std::size_t>(k)];
            if (v == ninf) continue;
            const int lo = price < 0.0 ? k : std::max(0, k - down);
            const int hi = std::min(K, k + up);
            for (int k2 = lo; k2 <= hi; ++k2) {
                const double e = (k2 - k) * unit;
                const double rev = e >= 0.0 ? -price * e / eta : price * (-e) * eta;
                double& slot = nxt[static_cast<std::size_t>(k2)];
                slot = std::max(slot, v + rev);
            }
        }
        std::swap(cur, nxt);
    }
    double best = ninf;
    for (int k = k0; k <= K; ++k) best = std::max(best, cur[static_cast<std::size_t>(k)]);
    return best;
}

}  // namespace oracle
