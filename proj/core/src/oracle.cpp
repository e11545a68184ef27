#include "nwa/oracle.hpp"

#include "nwa/investor.hpp"
#include "nwa/lindistflow.hpp"
#include "nwa/planner.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace nwa {

namespace {

// Lossless radial evaluation of the planner cost for a fixed investor
// response. Returns +inf when a rating or voltage bound is violated.
double evaluate_planner_cost(const CaseFile& c, const LowerLevelForm& llf,
                             const std::vector<double>& price, const std::vector<double>& y) {
    const Feeder& f = c.feeder;
    const int T = c.series.steps;
    const double dt = c.series.step_hours;
    const double a = pwf(c.econ.planner.r_e, c.econ.planner.r_c, c.econ.planner.r_wacc,
                         c.econ.planner.n_years);
    if (!c.bess_sites.empty())
        throw std::invalid_argument("oracle: BESS sites not supported in grid evaluation");

    std::vector<int> site_of_bus(f.buses.size(), -1);
    for (int s = 0; s < llf.n_sites(); ++s) site_of_bus[llf.site_bus[s]] = s;

    auto kids = f.children_lines();
    const double tan_phi = c.series.load_power_factor >= 1.0
                               ? 0.0
                               : std::tan(std::acos(c.series.load_power_factor));

    double energy = 0.0;
    std::vector<double> peak(c.series.demand_price.size(), 0.0);
    std::vector<std::array<double, 3>> subtree_p(f.buses.size()), subtree_q(f.buses.size());
    std::vector<std::array<double, 3>> vsq(f.buses.size());

    for (int t = 0; t < T; ++t) {
        // Net draw (load - injection) per bus/phase.
        std::function<bool(int)> accumulate = [&](int b) -> bool {
            auto& sp = subtree_p[b];
            auto& sq = subtree_q[b];
            sp = {0.0, 0.0, 0.0};
            sq = {0.0, 0.0, 0.0};
            const Bus& bus = f.buses[b];
            int np = phase_count(bus.phases);
            for (int ph = 0; ph < 3; ++ph) {
                if (!has_phase(bus.phases, ph)) continue;
                double load = c.series.load(b, ph, t);
                double qload = load * tan_phi;
                double draw = load;
                int site = site_of_bus[b];
                if (site >= 0) {
                    double imp = y[llf.import_col[site * T + t]];
                    double exp = y[llf.export_col[site * T + t]];
                    draw = (imp - exp) / dt / np;
                }
                sp[ph] += draw;
                sq[ph] += qload;
            }
            for (int li : kids[b]) {
                const Line& l = f.lines[li];
                int child = (l.from == b) ? l.to : l.from;
                if (!accumulate(child)) return false;
                for (int ph = 0; ph < 3; ++ph) {
                    if (!has_phase(l.phases, ph)) continue;
                    double flow = subtree_p[child][ph];
                    if (std::abs(flow) > l.rating_kw_per_phase + 1e-7) return false;
                    sp[ph] += flow;
                    sq[ph] += subtree_q[child][ph];
                }
            }
            return true;
        };
        if (!accumulate(f.substation)) return kInf;

        // Voltage propagation from the substation.
        vsq[f.substation] = {1.0, 1.0, 1.0};
        std::function<bool(int)> walk = [&](int b) -> bool {
            for (int li : kids[b]) {
                const Line& l = f.lines[li];
                int child = (l.from == b) ? l.to : l.from;
                SensitivityMatrices sm = sensitivity_matrices(l, f.z_base_ohm());
                for (int ph = 0; ph < 3; ++ph) {
                    if (!has_phase(l.phases, ph)) continue;
                    double v = vsq[b][ph];
                    for (int ps = 0; ps < 3; ++ps) {
                        if (!has_phase(l.phases, ps)) continue;
                        v += sm.mp[ph][ps] * subtree_p[child][ps] / f.base_kva;
                        v += sm.mq[ph][ps] * subtree_q[child][ps] / f.base_kva;
                    }
                    if (v < f.vmin_pu2 - 1e-9 || v > f.vmax_pu2 + 1e-9) return false;
                    vsq[child][ph] = v;
                }
                if (!walk(child)) return false;
            }
            return true;
        };
        if (!walk(f.substation)) return kInf;

        double head_total = 0.0;
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(f.buses[f.substation].phases, ph)) continue;
            double p0 = subtree_p[f.substation][ph];
            head_total += p0;
            energy += a * c.series.lmp[t] * std::max(0.0, p0) * dt;
        }
        int s = c.series.period_of_step[t];
        peak[s] = std::max(peak[s], head_total);
    }

    double demand = 0.0;
    for (std::size_t s = 0; s < peak.size(); ++s)
        demand += a * c.series.demand_price[s] * peak[s];

    double payment = 0.0;
    for (int p = 0; p < llf.n_price(); ++p)
        payment += a * price[p] * y[llf.export_col[p]];

    return energy + demand + payment;
}

}  // namespace

double planner_cost_for_fixed_signal(const CaseFile& c, const std::vector<double>& price) {
    LowerLevelForm llf = build_investor_lp(c);
    StandardLp lp = llf.as_standard_lp(price);
    SimplexResult r = simplex(lp);
    if (r.status != LpStatus::Optimal)
        throw std::runtime_error("oracle: lower level did not solve");
    return evaluate_planner_cost(c, llf, price, r.x);
}

BilevelOracleResult bilevel_oracle(const CaseFile& c, int grid_points_per_dim) {
    if (grid_points_per_dim < 2) throw std::invalid_argument("oracle: need at least 2 grid points");
    LowerLevelForm llf = build_investor_lp(c);
    const int dims = llf.n_price();
    if (dims > 6) throw std::invalid_argument("oracle: too many price dimensions (limit 6)");
    double combos = std::pow(static_cast<double>(grid_points_per_dim), dims);
    if (combos > 1e6) throw std::invalid_argument("oracle: grid too large (limit 1e6 evaluations)");

    const double step = c.price_cap / (grid_points_per_dim - 1);
    BilevelOracleResult out;
    out.best_cost = kInf;

    std::vector<int> idx(dims, 0);
    std::vector<double> price(dims, 0.0);
    bool done = false;
    while (!done) {
        for (int d = 0; d < dims; ++d) price[d] = idx[d] * step;
        StandardLp lp = llf.as_standard_lp(price);
        SimplexResult r = simplex(lp);
        ++out.evaluations;
        if (r.status == LpStatus::Optimal) {
            double cost = evaluate_planner_cost(c, llf, price, r.x);
            if (cost < out.best_cost - 1e-12) {
                out.best_cost = cost;
                out.best_price = price;
            }
        }
        // Lexicographic advance keeps tie-breaking deterministic (the
        // all-zero vector wins exact ties).
        int d = dims - 1;
        while (d >= 0 && ++idx[d] == grid_points_per_dim) {
            idx[d] = 0;
            --d;
        }
        if (d < 0) done = true;
    }

    const double a = llf.pwf_ul;
    double exp_total = 0.0;
    for (int p = 0; p < llf.n_price(); ++p) exp_total += llf.ub[llf.export_col[p]];
    out.resolution_slack = a * step * exp_total;
    return out;
}

}  // namespace nwa
