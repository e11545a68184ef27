#pragma once

#include <string>
#include <vector>

#include "nwa/model.hpp"
#include "nwa/network.hpp"
#include "nwa/simplex.hpp"

namespace nwa {

/// The DER investor LP in equality-plus-bounds standard form, plus the
/// coupling matrix into the planner's price variables. Every bound is
/// finite (required by the payment linearization).
struct LowerLevelForm {
    enum class Role { Capacity, Import, Export, Production, ProdSlack };
    struct Col {
        Role role;
        int site;  // -1 for none
        int t;     // -1 for capacity
        std::string name;
    };
    struct Row {
        bool is_balance;  // else production cap
        int site;
        int t;
        std::string name;
    };

    std::vector<Col> cols;
    std::vector<Row> rows;
    std::vector<double> c, w, lb, ub;
    SparseMatrix V;
    /// Nonzero coupling entries: cost gradient of export column k carries
    /// -pwf_ll * x_price(site,t). price index = site * steps + t.
    double coupling_value = 0.0;  // -pwf_ll
    double v_yexp = -1.0;         // export coefficient in its balance row
    double pwf_ll = 0.0;
    double pwf_ul = 0.0;
    int steps = 0;
    std::vector<int> site_bus;          // site -> bus index
    std::vector<int> export_col;        // price index -> export column (-1 if none)
    std::vector<int> import_col;        // per (site,t)
    std::vector<int> der_col;           // per (site,t)
    std::vector<int> slack_col;         // per (site,t)
    std::vector<int> capacity_col;      // per site
    std::vector<int> price_of_col;      // col -> price index (-1 unless export)

    int n_sites() const { return static_cast<int>(site_bus.size()); }
    int n_price() const { return n_sites() * steps; }
    int balance_row(int site, int t) const { return site * steps + t; }
    int prod_row(int site, int t) const { return n_sites() * steps + site * steps + t; }

    /// Objective vector for a fixed price signal: c + B x.
    std::vector<double> cost_with_signal(const std::vector<double>& price) const;
    StandardLp as_standard_lp(const std::vector<double>& price) const;
};

/// Builds the lower-level LP from the case: capacity, hourly import/export/
/// production columns plus production-cap slack, load balance rows tagged
/// per (site, step), finite bounds throughout.
LowerLevelForm build_investor_lp(const CaseFile& c);

struct InvestorResult {
    LpStatus status = LpStatus::IterLimit;
    double net_present_cost = 0.0;
    double capex = 0.0;
    double om_cost = 0.0;
    double energy_cost = 0.0;
    double income = 0.0;
    double energy_cost_baseline = 0.0;  // import-everything reference
    std::vector<double> capacity_kw;    // per site
    std::vector<double> y;              // LL column values
    std::vector<double> lambda;         // row duals
    std::vector<double> mu_lb, mu_ub;   // bound duals
    double objective = 0.0;             // LL objective (cost - income)
};

/// Standalone solve with the given price signal per (site, step); an empty
/// vector means the zero signal.
InvestorResult solve_investor(const CaseFile& c, const std::vector<double>& price);

inline InvestorResult solve_no_signal(const CaseFile& c) { return solve_investor(c, {}); }

}  // namespace nwa
