#include "batval/arbitrage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include <fmt/format.h>

#include "batval/network_simplex.hpp"

namespace batval {

namespace {

// Tie-break cost on charging so that a charge and a discharge never share an
// interval when both are otherwise free.
constexpr double kChargeTieBreak = 1e-7;
constexpr int kMaxOuterIterations = 200;

struct Point {
    double mu = 0.0;
    double revenue = 0.0;      // without the tie-break term
    double degradation = 0.0;  // D_cyc of the flow
    double flow_value = 0.0;   // max over flows of revenue - mu * D
    std::vector<double> flows;
};

// k(mu) = max_{D in [0, cap]} f(D) + mu * D for concave piecewise-linear f.
struct OuterTerm {
    std::vector<double> knots;  // increasing, first 0, last cap
    std::vector<double> values; // f at the knots

    struct Max {
        double value;
        double arg_lo;
        double arg_hi;
    };

    [[nodiscard]] double f(double d) const {
        // f is linear between knots and extended linearly beyond the ends.
        if (knots.size() == 1) return values[0];
        auto it = std::upper_bound(knots.begin(), knots.end(), d);
        std::size_t k = static_cast<std::size_t>(it - knots.begin());
        k = std::clamp<std::size_t>(k, 1, knots.size() - 1);
        const double w = (d - knots[k - 1]) / (knots[k] - knots[k - 1]);
        return values[k - 1] + w * (values[k] - values[k - 1]);
    }

    [[nodiscard]] Max maximize(double mu) const {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < knots.size(); ++k) {
            best = std::max(best, values[k] + mu * knots[k]);
        }
        const double tol = 1e-12 * std::max(1.0, std::abs(best));
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t k = 0; k < knots.size(); ++k) {
            if (values[k] + mu * knots[k] >= best - tol) {
                lo = std::min(lo, knots[k]);
                hi = std::max(hi, knots[k]);
            }
        }
        return {best, lo, hi};
    }
};

struct Shape {
    std::size_t intervals = 0;
    std::vector<double> widths;
    std::vector<double> fill;
    double charge_cap = 0.0;
    double discharge_cap = 0.0;

    friend bool operator==(const Shape&, const Shape&) = default;
};

}  // namespace

void DailyArbitrageInstance::validate() const {
    params.validate();
    if (prices.empty()) throw std::invalid_argument("price vector is empty");
    for (double p : prices) {
        if (!std::isfinite(p)) throw std::invalid_argument("prices must be finite");
    }
    if (!(step_hours > 0.0)) throw std::invalid_argument("step duration must be positive");
    const double day = step_hours * static_cast<double>(prices.size());
    if (std::abs(day - 24.0) > 1e-9 * 24.0) {
        throw std::invalid_argument(fmt::format("intervals cover {} h, expected 24 h", day));
    }
    if (!(capacity_mwh > 0.0)) throw std::invalid_argument("capacity must be positive");
    if (stress.segments() < 1 || stress.segment_energy.size() != stress.segments()) {
        throw std::invalid_argument("linearized stress needs J >= 1 matching segments");
    }
    for (std::size_t j = 0; j < stress.segments(); ++j) {
        if (!(stress.slopes[j] >= 0.0) || !std::isfinite(stress.slopes[j])) {
            throw std::invalid_argument("segment slopes must be finite and non-negative");
        }
        if (!(stress.segment_energy[j] > 0.0)) {
            throw std::invalid_argument("segment widths must be positive");
        }
    }
    if (std::abs(stress.total_energy() - capacity_mwh) > 1e-9 * capacity_mwh) {
        throw std::invalid_argument("segment widths must add up to the capacity");
    }
    if (!(calendar_rate >= 0.0)) throw std::invalid_argument("calendar rate must be non-negative");
    if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("discount must lie in (0, 1]");
    if (!(initial_soc_fraction >= 0.0 && initial_soc_fraction <= 1.0)) {
        throw std::invalid_argument("initial SoC fraction must lie in [0, 1]");
    }
}

DailyArbitrageInstance make_instance(std::vector<double> prices, double step_hours,
                                     double capacity_mwh, ConcaveCuts cuts,
                                     const BatteryParams& params, int segments,
                                     double calendar_rate, double discount) {
    DailyArbitrageInstance inst;
    inst.prices = std::move(prices);
    inst.step_hours = step_hours;
    inst.capacity_mwh = capacity_mwh;
    inst.cuts = std::move(cuts);
    inst.params = params;
    inst.stress = linearize_stress(params.stress, segments, params.efficiency(), capacity_mwh);
    inst.calendar_rate = calendar_rate;
    inst.discount = discount;
    return inst;
}

DispatchProfile DailySolution::profile(double step_hours, double capacity_mwh) const {
    DispatchProfile out;
    out.step_hours = step_hours;
    out.capacity_mwh = capacity_mwh;
    out.power_mw = power_mw;
    out.soc_mwh = soc_mwh;
    return out;
}

struct DailyArbitrageSolver::Impl {
    Shape shape;
    std::optional<NetworkSimplex> net;
    std::size_t J = 0;
    std::size_t T = 0;
    // Arc ids.
    std::vector<int> storage;       // [t*J + j]: Y(t,j) -> Y(t+1,j) or F
    std::vector<int> charge_in;     // [t*J + j]: C_t -> Y(t,j)
    std::vector<int> discharge_out; // [t*J + j]: Y(t,j) -> D_t
    std::vector<int> charge_hub;    // [t]: G -> C_t
    std::vector<int> discharge_hub; // [t]: D_t -> G
    std::size_t pivots = 0;

    void build(const DailyArbitrageInstance& inst, const Shape& s);
    Point evaluate(const DailyArbitrageInstance& inst, double mu);
    DailySolution extract(const DailyArbitrageInstance& inst, const std::vector<double>& flows,
                          const std::vector<double>& fill) const;
};

void DailyArbitrageSolver::Impl::build(const DailyArbitrageInstance& inst, const Shape& s) {
    shape = s;
    T = s.intervals;
    J = s.widths.size();
    const int nT = static_cast<int>(T);
    const int nJ = static_cast<int>(J);
    const int C0 = nT * nJ;
    const int D0 = C0 + nT;
    const int F = D0 + nT;
    const int G = F + 1;
    net.emplace(G + 1);
    NetworkSimplex& n = *net;

    storage.assign(T * J, -1);
    charge_in.assign(T * J, -1);
    discharge_out.assign(T * J, -1);
    charge_hub.assign(T, -1);
    discharge_hub.assign(T, -1);

    auto y = [nJ](int t, int j) { return t * nJ + j; };
    for (int t = 0; t < nT; ++t) {
        for (int j = 0; j < nJ; ++j) {
            const auto idx = static_cast<std::size_t>(t * nJ + j);
            const int next = t + 1 < nT ? y(t + 1, j) : F;
            storage[idx] = n.add_arc(y(t, j), next, s.widths[static_cast<std::size_t>(j)], 0.0);
            charge_in[idx] = n.add_arc(C0 + t, y(t, j), NetworkSimplex::kInfinite, 0.0);
            discharge_out[idx] = n.add_arc(y(t, j), D0 + t, NetworkSimplex::kInfinite, 0.0);
        }
        charge_hub[static_cast<std::size_t>(t)] = n.add_arc(G, C0 + t, s.charge_cap, 0.0);
        discharge_hub[static_cast<std::size_t>(t)] = n.add_arc(D0 + t, G, s.discharge_cap, 0.0);
    }
    n.add_arc(F, G, NetworkSimplex::kInfinite, 0.0);

    double stored = 0.0;
    for (int j = 0; j < nJ; ++j) {
        n.set_supply(y(0, j), s.fill[static_cast<std::size_t>(j)]);
        stored += s.fill[static_cast<std::size_t>(j)];
    }
    n.set_supply(F, -stored);
    (void)inst;
}

Point DailyArbitrageSolver::Impl::evaluate(const DailyArbitrageInstance& inst, double mu) {
    NetworkSimplex& n = *net;
    const double eta = inst.params.efficiency();
    for (std::size_t t = 0; t < T; ++t) {
        const double price = inst.prices[t];
        n.set_cost(charge_hub[t], price / eta + kChargeTieBreak);
        n.set_cost(discharge_hub[t], -price * eta);
        n.set_capacity(discharge_hub[t], price < 0.0 ? 0.0 : shape.discharge_cap);
        for (std::size_t j = 0; j < J; ++j) {
            n.set_cost(discharge_out[t * J + j], mu * inst.stress.slopes[j] * eta);
        }
    }
    const auto status = n.solve();
    pivots += n.last_pivots();
    if (status != NetworkSimplex::Status::Optimal) {
        throw SolverError(fmt::format("daily flow problem not solved (status {}, {} pivots, mu {})",
                                      static_cast<int>(status), n.last_pivots(), mu));
    }
    Point p;
    p.mu = mu;
    p.flows.resize(static_cast<std::size_t>(n.arc_count()));
    for (int a = 0; a < n.arc_count(); ++a) p.flows[static_cast<std::size_t>(a)] = n.flow(a);
    for (std::size_t t = 0; t < T; ++t) {
        const double price = inst.prices[t];
        p.revenue += price * (eta * n.flow(discharge_hub[t]) - n.flow(charge_hub[t]) / eta);
        for (std::size_t j = 0; j < J; ++j) {
            p.degradation += inst.stress.slopes[j] * eta * n.flow(discharge_out[t * J + j]);
        }
    }
    p.flow_value = p.revenue - mu * p.degradation;
    return p;
}

DailySolution DailyArbitrageSolver::Impl::extract(const DailyArbitrageInstance& inst,
                                                  const std::vector<double>& flows,
                                                  const std::vector<double>& fill) const {
    const double eta = inst.params.efficiency();
    const double M = inst.step_hours;
    DailySolution s;
    s.power_mw.assign(T, 0.0);
    s.discharge_mw.assign(T, std::vector<double>(J, 0.0));
    s.charge_mw.assign(T, std::vector<double>(J, 0.0));
    s.segment_soc_mwh.assign(T + 1, std::vector<double>(J, 0.0));
    s.soc_mwh.assign(T + 1, 0.0);
    s.segment_soc_mwh[0] = fill;
    for (std::size_t t = 0; t < T; ++t) {
        double p = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const std::size_t k = t * J + j;
            const double drained = flows[static_cast<std::size_t>(discharge_out[k])];
            const double filled = flows[static_cast<std::size_t>(charge_in[k])];
            s.discharge_mw[t][j] = eta * drained / M;
            s.charge_mw[t][j] = filled / (eta * M);
            s.segment_soc_mwh[t + 1][j] = flows[static_cast<std::size_t>(storage[k])];
            p += s.discharge_mw[t][j] - s.charge_mw[t][j];
            s.cycle_degradation += inst.stress.slopes[j] * M * s.discharge_mw[t][j];
        }
        s.power_mw[t] = p;
        s.revenue += M * inst.prices[t] * p;
    }
    for (std::size_t t = 0; t <= T; ++t) {
        double e = 0.0;
        for (double x : s.segment_soc_mwh[t]) e += x;
        s.soc_mwh[t] = e;
    }
    const double rated = inst.params.energy_mwh;
    s.end_capacity_mwh =
        inst.capacity_mwh - (s.cycle_degradation + inst.calendar_rate) * rated;
    s.future_value = inst.cuts.empty() ? 0.0 : inst.cuts(s.end_capacity_mwh);
    s.objective = s.revenue + inst.discount * s.future_value;
    return s;
}

DailyArbitrageSolver::DailyArbitrageSolver() : impl_(std::make_unique<Impl>()) {}
DailyArbitrageSolver::~DailyArbitrageSolver() = default;
DailyArbitrageSolver::DailyArbitrageSolver(DailyArbitrageSolver&&) noexcept = default;
DailyArbitrageSolver& DailyArbitrageSolver::operator=(DailyArbitrageSolver&&) noexcept = default;

DailySolution DailyArbitrageSolver::solve(const DailyArbitrageInstance& inst) {
    inst.validate();
    Impl& im = *impl_;
    const double eta = inst.params.efficiency();
    const double M = inst.step_hours;
    const double P = inst.params.power_mw;
    const double rated = inst.params.energy_mwh;

    Shape shape;
    shape.intervals = inst.prices.size();
    shape.widths = inst.stress.segment_energy;
    shape.fill = initial_segment_fill(inst.stress, inst.initial_soc_fraction * inst.capacity_mwh);
    shape.charge_cap = eta * M * P;
    shape.discharge_cap = M * P / eta;
    if (!im.net || !(shape == im.shape)) im.build(inst, shape);
    im.pivots = 0;

    // Future value as a function of cycle degradation D.
    const double start = inst.capacity_mwh - inst.calendar_rate * rated;
    double max_slope = 0.0;
    for (double d : inst.stress.slopes) max_slope = std::max(max_slope, d);
    const double d_cap = static_cast<double>(im.T) * M * P * max_slope * (1.0 + 1e-9) + 1e-15;
    OuterTerm outer;
    outer.knots.push_back(0.0);
    if (!inst.cuts.empty()) {
        const auto& br = inst.cuts.breakpoints();
        for (auto it = br.rbegin(); it != br.rend(); ++it) {
            const double d = (start - *it) / rated;
            if (d > 0.0 && d < d_cap) outer.knots.push_back(d);
        }
    }
    if (d_cap > 0.0) outer.knots.push_back(d_cap);
    for (double d : outer.knots) {
        outer.values.push_back(inst.cuts.empty() ? 0.0 : inst.discount * inst.cuts(start - d * rated));
    }

    // Every flow solution seen; the primal answer is the best mixture of two.
    std::vector<Point> pts;
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    double best_theta = 1.0;
    double best_value = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    auto consider_mix = [&](std::size_t ia, std::size_t ib) {
        const Point& a = pts[ia];
        const Point& b = pts[ib];
        std::vector<double> thetas = {0.0, 1.0};
        const double dd = a.degradation - b.degradation;
        if (dd != 0.0) {
            for (double knot : outer.knots) {
                const double th = (knot - b.degradation) / dd;
                if (th > 0.0 && th < 1.0) thetas.push_back(th);
            }
        }
        for (double th : thetas) {
            const double r = th * a.revenue + (1.0 - th) * b.revenue;
            const double d = th * a.degradation + (1.0 - th) * b.degradation;
            const double v = r + outer.f(d);
            if (v > best_value) {
                best_value = v;
                best_a = ia;
                best_b = ib;
                best_theta = th;
            }
        }
    };

    double margin = 0.0;
    {
        const auto [pmin, pmax] = std::minmax_element(inst.prices.begin(), inst.prices.end());
        margin = std::max(0.0, *pmax) * eta - std::min(0.0, *pmin) / eta;
    }
    // Start at the marginal value of capacity where the day begins; when the
    // optimal day stays on one cut piece this is already the right price.
    double mu = inst.cuts.empty() ? 0.0 : inst.discount * rated * inst.cuts.left_slope(start);
    std::optional<std::size_t> lo;  // flow degradation above k's maximizers
    std::optional<std::size_t> hi;  // flow degradation below k's maximizers
    int iter = 0;
    bool converged = false;
    for (; iter < kMaxOuterIterations; ++iter) {
        pts.push_back(im.evaluate(inst, mu));
        const std::size_t cur = pts.size() - 1;
        const Point& pt = pts[cur];
        const auto k = outer.maximize(mu);
        upper = std::min(upper, pt.flow_value + k.value);
        const double slack = 1e-12 * std::max(1.0, pt.degradation);
        consider_mix(cur, cur);
        if (pt.degradation <= k.arg_hi + slack && pt.degradation >= k.arg_lo - slack) {
            converged = true;
            break;
        }
        if (pt.degradation > k.arg_hi) lo = cur;
        else hi = cur;
        if (lo && hi) consider_mix(*lo, *hi);
        const double tol = DailyArbitrageSolver::kRelativeTolerance * std::max(1.0, std::abs(upper)) + 1e-9;
        if (upper - best_value <= tol) {
            converged = true;
            break;
        }
        if (!hi) {
            // Past this price no cycle pays for its wear, so the flow has D = 0.
            const double stop = margin / (max_slope * eta) * 1.01 + 1.0;
            mu = std::max({2.0 * mu, stop, 1.0});
            continue;
        }
        if (!lo) {
            const double m = pts[*hi].mu;
            mu = m > 0.0 ? 0.0 : -std::max(1.0, 2.0 * std::abs(m));
            continue;
        }
        // Kelley step: intersect the supporting lines of the dual at lo and hi.
        const Point& a = pts[*lo];
        const Point& b = pts[*hi];
        const auto ka = outer.maximize(a.mu);
        const auto kb = outer.maximize(b.mu);
        const double fa = a.flow_value + ka.value;
        const double fb = b.flow_value + kb.value;
        const double ga = ka.arg_hi - a.degradation;  // < 0
        const double gb = kb.arg_lo - b.degradation;  // > 0
        const double width = b.mu - a.mu;
        double next = 0.5 * (a.mu + b.mu);
        if (gb - ga > 0.0) {
            const double cand = (fb - fa + ga * a.mu - gb * b.mu) / (ga - gb);
            if (cand > a.mu + 1e-6 * width && cand < b.mu - 1e-6 * width) next = cand;
        }
        if (!(next > a.mu && next < b.mu)) break;
        mu = next;
    }

    const double gap = upper - best_value;
    if (!converged && gap > 1e-6 * std::max(1.0, std::abs(upper))) {
        throw SolverError(fmt::format(
            "daily solver did not converge: {} outer iterations, {} flow solves, {} pivots, bound gap {}",
            iter, pts.size(), im.pivots, gap));
    }

    const Point& pa = pts[best_a];
    const Point& pb = pts[best_b];
    std::vector<double> flows(pa.flows.size());
    for (std::size_t a = 0; a < flows.size(); ++a) {
        flows[a] = best_theta * pa.flows[a] + (1.0 - best_theta) * pb.flows[a];
    }
    DailySolution sol = im.extract(inst, flows, shape.fill);
    sol.dual_bound = std::max(upper, sol.objective);
    sol.lp_solves = pts.size();
    sol.pivots = im.pivots;
    return sol;
}

DailySolution solve_daily(const DailyArbitrageInstance& instance) {
    DailyArbitrageSolver solver;
    return solver.solve(instance);
}

std::vector<ConstraintViolation> verify_solution(const DailyArbitrageInstance& inst,
                                                 const DailySolution& s, double tol) {
    std::vector<ConstraintViolation> out;
    auto flag = [&](const char* what, std::size_t t, double amount) {
        if (amount > tol) out.push_back({what, t, amount});
    };
    const std::size_t T = inst.prices.size();
    const std::size_t J = inst.stress.segments();
    if (s.power_mw.size() != T || s.soc_mwh.size() != T + 1 || s.discharge_mw.size() != T ||
        s.charge_mw.size() != T || s.segment_soc_mwh.size() != T + 1) {
        out.push_back({"shape", 0, 0.0});
        return out;
    }
    const double eta = inst.params.efficiency();
    const double M = inst.step_hours;
    const double P = inst.params.power_mw;
    const double En = inst.capacity_mwh;

    flag("initial_soc", 0, std::abs(s.soc_mwh[0] - inst.initial_soc_fraction * En));
    double degradation = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const double p = s.power_mw[t];
        flag("power_bounds", t, std::abs(p) - P);
        const double loss = p >= 0.0 ? M * p / eta : M * p * eta;
        flag("soc_dynamics", t, std::abs(s.soc_mwh[t + 1] - (s.soc_mwh[t] - loss)));
        flag("soc_bounds", t + 1, std::max(-s.soc_mwh[t + 1], s.soc_mwh[t + 1] - En));

        if (s.discharge_mw[t].size() != J || s.charge_mw[t].size() != J ||
            s.segment_soc_mwh[t + 1].size() != J) {
            out.push_back({"shape", t, 0.0});
            continue;
        }
        double dis = 0.0;
        double chg = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const double pd = s.discharge_mw[t][j];
            const double pc = s.charge_mw[t][j];
            flag("segment_power_sign", t, std::max(-pd, -pc));
            dis += pd;
            chg += pc;
            const double e0 = s.segment_soc_mwh[t][j];
            const double e1 = s.segment_soc_mwh[t + 1][j];
            flag("segment_dynamics", t, std::abs(e1 - (e0 + M * pc * eta - M * pd / eta)));
            flag("segment_bounds", t + 1, std::max(-e1, e1 - inst.stress.segment_energy[j]));
            degradation += inst.stress.slopes[j] * M * pd;
        }
        flag("segment_power_split", t, std::abs(p - (dis - chg)));
        flag("discharge_limit", t, dis - P);
        flag("charge_limit", t, chg - P);
        if (inst.prices[t] < 0.0) flag("negative_price_discharge", t, dis);
        double total = 0.0;
        for (double x : s.segment_soc_mwh[t + 1]) total += x;
        flag("segment_soc_sum", t + 1, std::abs(total - s.soc_mwh[t + 1]));
    }
    flag("terminal_soc", T, s.soc_mwh[0] - s.soc_mwh[T]);
    flag("degradation_accounting", T, std::abs(degradation - s.cycle_degradation));
    const double end = En - (s.cycle_degradation + inst.calendar_rate) * inst.params.energy_mwh;
    flag("end_capacity", T, std::abs(end - s.end_capacity_mwh));
    return out;
}

}  // namespace batval
