#include "nwa/investor.hpp"

#include "nwa/planner.hpp"

#include <cmath>
#include <stdexcept>

namespace nwa {

std::vector<double> LowerLevelForm::cost_with_signal(const std::vector<double>& price) const {
    std::vector<double> out = c;
    if (price.empty()) return out;
    if (static_cast<int>(price.size()) != n_price())
        throw std::invalid_argument("price vector size mismatch");
    for (std::size_t k = 0; k < cols.size(); ++k) {
        int m = price_of_col[k];
        if (m >= 0) out[k] += coupling_value * price[m];
    }
    return out;
}

StandardLp LowerLevelForm::as_standard_lp(const std::vector<double>& price) const {
    StandardLp lp;
    lp.c = cost_with_signal(price);
    lp.V = V;
    lp.w = w;
    lp.lb = lb;
    lp.ub = ub;
    lp.col_to_var.assign(cols.size(), -1);
    lp.var_to_col.clear();
    lp.row_to_con.assign(rows.size(), -1);
    lp.slack_of_row.assign(rows.size(), -1);
    return lp;
}

LowerLevelForm build_investor_lp(const CaseFile& c) {
    if (c.der_sites.empty()) throw std::invalid_argument("build_investor_lp: no DER sites");
    LowerLevelForm f;
    const int T = c.series.steps;
    const double dt = c.series.step_hours;
    f.steps = T;
    f.pwf_ll = pwf(c.econ.investor.r_e, c.econ.investor.r_c, c.econ.investor.ror,
                   c.econ.planner.n_years);
    f.pwf_ul = pwf(c.econ.planner.r_e, c.econ.planner.r_c, c.econ.planner.r_wacc,
                   c.econ.planner.n_years);
    f.coupling_value = -f.pwf_ll;
    f.v_yexp = -1.0;

    const int ns = static_cast<int>(c.der_sites.size());
    for (const DerSite& s : c.der_sites) f.site_bus.push_back(s.bus);

    f.import_col.assign(ns * T, -1);
    f.export_col.assign(ns * T, -1);
    f.der_col.assign(ns * T, -1);
    f.slack_col.assign(ns * T, -1);
    f.capacity_col.assign(ns, -1);

    const double import_cost = f.pwf_ll * c.econ.investor.import_price;  // $ per kWh
    const double p_cap = c.econ.investor.der_kw_cost +
                         f.pwf_ll * c.econ.investor.om_cost_per_kw_year;

    auto add_col = [&](LowerLevelForm::Role role, int site, int t, const std::string& name,
                       double lb, double ub, double cost) {
        int k = static_cast<int>(f.cols.size());
        f.cols.push_back({role, site, t, name});
        f.lb.push_back(lb);
        f.ub.push_back(ub);
        f.c.push_back(cost);
        f.price_of_col.push_back(-1);
        return k;
    };

    for (int s = 0; s < ns; ++s) {
        const DerSite& site = c.der_sites[s];
        const Bus& bus = c.feeder.buses[site.bus];
        if (c.series.production[site.bus].empty())
            throw std::invalid_argument("build_investor_lp: missing production factor at " +
                                        bus.id);
        if (site.cap_kw <= 0.0)
            throw std::invalid_argument("build_investor_lp: nonpositive site cap at " + bus.id);
        const double peak = c.peak_bus_demand(site.bus) * dt;
        f.capacity_col[s] = add_col(LowerLevelForm::Role::Capacity, s, -1, "ykw_" + bus.id, 0.0,
                                    site.cap_kw, p_cap);
        for (int t = 0; t < T; ++t) {
            const double fprod = c.series.production[site.bus][t];
            const double prod_cap = fprod * site.cap_kw * dt;
            f.import_col[s * T + t] = add_col(LowerLevelForm::Role::Import, s, t,
                                              "yimp_" + bus.id + "_" + std::to_string(t), 0.0,
                                              peak, import_cost);
            // Exports can never exceed what the site can produce in the step.
            f.export_col[s * T + t] =
                add_col(LowerLevelForm::Role::Export, s, t,
                        "yexp_" + bus.id + "_" + std::to_string(t), 0.0, prod_cap, 0.0);
            f.price_of_col.back() = s * T + t;
            f.der_col[s * T + t] = add_col(LowerLevelForm::Role::Production, s, t,
                                           "yder_" + bus.id + "_" + std::to_string(t), 0.0,
                                           prod_cap, 0.0);
            f.slack_col[s * T + t] = add_col(LowerLevelForm::Role::ProdSlack, s, t,
                                             "sprod_" + bus.id + "_" + std::to_string(t), 0.0,
                                             prod_cap, 0.0);
        }
    }

    // Rows: balances first, production caps second (dual tags by position).
    for (int s = 0; s < ns; ++s) {
        const Bus& bus = c.feeder.buses[f.site_bus[s]];
        for (int t = 0; t < T; ++t)
            f.rows.push_back({true, s, t, "llbal_" + bus.id + "_" + std::to_string(t)});
    }
    for (int s = 0; s < ns; ++s) {
        const Bus& bus = c.feeder.buses[f.site_bus[s]];
        for (int t = 0; t < T; ++t)
            f.rows.push_back({false, s, t, "llprod_" + bus.id + "_" + std::to_string(t)});
    }
    f.w.assign(f.rows.size(), 0.0);
    for (int s = 0; s < ns; ++s)
        for (int t = 0; t < T; ++t)
            f.w[f.balance_row(s, t)] = c.bus_demand(f.site_bus[s], t) * dt;

    // Column-major assembly of V.
    const int ncols = static_cast<int>(f.cols.size());
    const int nrows = static_cast<int>(f.rows.size());
    f.V.rows = nrows;
    f.V.cols = ncols;
    f.V.col_ptr.assign(ncols + 1, 0);
    std::vector<std::vector<std::pair<int, double>>> colent(ncols);
    for (int s = 0; s < ns; ++s) {
        const double* fprod = c.series.production[f.site_bus[s]].data();
        for (int t = 0; t < T; ++t) {
            int br = f.balance_row(s, t), pr = f.prod_row(s, t);
            colent[f.import_col[s * T + t]].push_back({br, 1.0});
            colent[f.export_col[s * T + t]].push_back({br, f.v_yexp});
            colent[f.der_col[s * T + t]].push_back({br, 1.0});
            colent[f.der_col[s * T + t]].push_back({pr, 1.0});
            colent[f.slack_col[s * T + t]].push_back({pr, 1.0});
            colent[f.capacity_col[s]].push_back({pr, -fprod[t] * dt});
        }
    }
    for (int k = 0; k < ncols; ++k) f.V.col_ptr[k + 1] = f.V.col_ptr[k] + colent[k].size();
    f.V.row_idx.resize(f.V.col_ptr.back());
    f.V.val.resize(f.V.col_ptr.back());
    for (int k = 0; k < ncols; ++k) {
        int p = f.V.col_ptr[k];
        for (auto& [r, v] : colent[k]) {
            f.V.row_idx[p] = r;
            f.V.val[p] = v;
            ++p;
        }
    }
    return f;
}

InvestorResult solve_investor(const CaseFile& c, const std::vector<double>& price) {
    LowerLevelForm f = build_investor_lp(c);
    StandardLp lp = f.as_standard_lp(price);
    SimplexResult r = simplex(lp);
    InvestorResult out;
    out.status = r.status;
    if (r.status != LpStatus::Optimal) return out;
    out.y = r.x;
    out.lambda = r.duals;
    out.mu_lb.assign(f.cols.size(), 0.0);
    out.mu_ub.assign(f.cols.size(), 0.0);
    for (std::size_t k = 0; k < f.cols.size(); ++k) {
        double d = r.reduced_costs[k];
        if (r.vstat[k] == kAtLower && d > 0)
            out.mu_lb[k] = d;
        else if (r.vstat[k] == kAtUpper && d < 0)
            out.mu_ub[k] = -d;
    }
    out.objective = r.objective;

    const int T = f.steps;
    const double dt = c.series.step_hours;
    const double import_cost = f.pwf_ll * c.econ.investor.import_price;
    out.capacity_kw.resize(f.n_sites());
    for (int s = 0; s < f.n_sites(); ++s) {
        double kw = r.x[f.capacity_col[s]];
        out.capacity_kw[s] = kw;
        out.capex += c.econ.investor.der_kw_cost * kw;
        out.om_cost += f.pwf_ll * c.econ.investor.om_cost_per_kw_year * kw;
        for (int t = 0; t < T; ++t) {
            out.energy_cost += import_cost * r.x[f.import_col[s * T + t]];
            out.energy_cost_baseline += import_cost * c.bus_demand(f.site_bus[s], t) * dt;
            if (!price.empty())
                out.income += f.pwf_ll * price[s * T + t] * r.x[f.export_col[s * T + t]];
        }
    }
    out.net_present_cost = out.capex + out.om_cost + out.energy_cost - out.income;
    return out;
}

}  // namespace nwa
