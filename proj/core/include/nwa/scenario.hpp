#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nwa/bilevel.hpp"
#include "nwa/branch_and_bound.hpp"
#include "nwa/investor.hpp"
#include "nwa/network.hpp"

namespace nwa {

enum class ScenarioKind { Baseline, BessOnly, BessDer };

/// Scenario model proven infeasible (for example a baseline case lacking an
/// upgrade option for an overloaded component).
struct ScenarioInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string to_string(ScenarioKind k);
std::optional<ScenarioKind> parse_scenario(const std::string& s);

struct SolverConfig {
    enum class Backend { Internal, External };
    Backend backend = Backend::Internal;
    std::string external_cmd;  // invoked as `cmd model.lp solution.txt`
    std::string workdir = ".nwa_work";
    double gap_target = 0.02;
    long node_limit = 200000;
    double time_limit_s = 0.0;
    int bigm_rounds = 3;
    int horizon = 0;  // 0 = full case horizon
};

struct BessSizeRow {
    std::string bus;
    double kw = 0.0;
    double kwh = 0.0;
    double duration_h = 0.0;
};

struct DerRow {
    std::string bus;
    double capacity_kw = 0.0;
};

struct InvestorTable {
    double net_present_cost = 0.0;
    double capex = 0.0;
    double income = 0.0;
    double energy_cost_savings = 0.0;
    std::vector<DerRow> capacity;
};

struct ScenarioReport {
    std::string scenario;
    std::string case_name;
    std::string case_path;
    std::uint64_t case_hash = 0;
    int horizon = 0;
    double annual_scale = 1.0;

    double total_lcc = 0.0;
    double trfx_upgrade_cost = 0.0;
    double line_upgrade_cost = 0.0;
    double bulk_energy_cost = 0.0;
    double demand_charge_cost = 0.0;
    double bess_capex = 0.0;
    double der_payment_cost = 0.0;

    int trfx_upgraded = 0, trfx_upgradable = 0;
    int lines_upgraded = 0, lines_upgradable = 0;
    std::vector<std::string> upgraded_components;
    std::vector<BessSizeRow> bess;
    std::vector<DerRow> der;

    /// Price signal per (site, t) in effective model units; divide by
    /// annual_scale for real $/kWh.
    std::vector<std::string> der_buses;
    std::vector<double> price_eff;

    double capex_total = 0.0;
    double annual_operating = 0.0;
    std::vector<double> cashflow;  // year 0 capex, then discounted years 1..N

    double gap = 0.0;
    long nodes = 0;
    double solve_seconds = 0.0;
    bool limits_hit = false;

    double kkt_stationarity = 0.0, kkt_primal = 0.0, kkt_complementarity = 0.0;
    bool kkt_pass = false;
    double payment_direct = 0.0, payment_linearized = 0.0;
    double payment_rel_gap = 0.0, zero_sum_rel_gap = 0.0;
    double argmin_rel_gap = 0.0;
    double max_balance_residual = 0.0;

    InvestorTable investor_no_signal;
    InvestorTable investor;

    // Lower-level solution archived for offline verification.
    std::vector<double> ll_y, ll_lam, ll_mu_lb, ll_mu_ub;

    // Solved planner series kept for analysis/tests.
    std::vector<double> head_total;  // per step, kW (all phases)
    std::vector<std::string> provenance;
};

/// Builds the scenario's single-level model, solves it, verifies the KKT
/// block when the price signal is active, and assembles the report.
/// Baseline fixes BESS to zero, the signal to zero, and forces the upgrade
/// binary of every overloaded component to one; bess-only fixes the signal
/// only; bess-der fixes nothing.
ScenarioReport run_scenario(const CaseFile& c, ScenarioKind kind, const SolverConfig& cfg);

struct ComparisonRow {
    std::string label;
    std::vector<double> values;  // one per report
};

struct ComparisonTable {
    std::vector<std::string> scenarios;
    std::vector<ComparisonRow> rows;
    std::string to_text() const;
    std::string to_csv() const;
};

/// Side-by-side lifecycle comparison; net present value measured against
/// the baseline report. Throws when case hashes differ.
ComparisonTable compare(const std::vector<ScenarioReport>& reports);

struct CashflowSeries {
    double year0 = 0.0;
    std::vector<double> discounted_years;  // years 1..N
    double total() const;
    std::string to_csv() const;
};

CashflowSeries cashflow(const ScenarioReport& report);

std::string price_signal_csv(const ScenarioReport& report);
std::string investor_table_csv(const ScenarioReport& report);

void save_report(const ScenarioReport& r, const std::string& path);
ScenarioReport load_report(const std::string& path);

struct ValidationOutcome {
    bool pass = false;
    std::string detail;
};

/// Re-derives the lower-level form from the case and re-checks the stored
/// solution: KKT residuals, payment identities, and the argmin re-solve.
ValidationOutcome validate_report_kkt(const CaseFile& c, const ScenarioReport& r, double tol = 1e-6);

/// Case restricted to the first `horizon` steps (series truncated, demand
/// periods re-normalized); returns the case unchanged when horizon covers it.
CaseFile truncate_case(const CaseFile& c, int horizon);

/// The scenario's single-level model in the LP interchange format, exactly
/// as run_scenario would build it (before solving).
std::string export_scenario_lp(const CaseFile& c, ScenarioKind kind, int horizon = 0);

}  // namespace nwa
