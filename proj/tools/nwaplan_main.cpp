// nwaplan: distribution planning with DER valued as non-wires alternatives.
//
// Subcommands: run, compare, cashflow, export, inspect, validate-kkt,
// make-case, solve-file. Exit codes: 0 ok, 2 infeasible, 3 solver limits
// hit, 4 verification failed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nwa/branch_and_bound.hpp"
#include "nwa/lp_format.hpp"
#include "nwa/network.hpp"
#include "nwa/scenario.hpp"
#include "nwa/synth_case.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitLimits = 3;
constexpr int kExitVerification = 4;

nwa::SolverConfig make_solver_config(const std::string& solver, double gap, int horizon,
                                     double time_limit, long node_limit) {
    nwa::SolverConfig cfg;
    cfg.gap_target = gap;
    cfg.horizon = horizon;
    cfg.time_limit_s = time_limit;
    if (node_limit > 0) cfg.node_limit = node_limit;
    if (solver == "internal" || solver.empty()) {
        cfg.backend = nwa::SolverConfig::Backend::Internal;
    } else if (solver.rfind("external:", 0) == 0) {
        cfg.backend = nwa::SolverConfig::Backend::External;
        cfg.external_cmd = solver.substr(9);
    } else {
        throw CLI::ValidationError("--solver must be internal or external:CMD");
    }
    return cfg;
}

std::string out_path_for(const std::string& base, const std::string& scenario) {
    auto dot = base.rfind('.');
    if (dot == std::string::npos) return base + "_" + scenario + ".json";
    return base.substr(0, dot) + "_" + scenario + base.substr(dot);
}

void write_text(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

int cmd_run(const std::string& case_path, const std::string& scenario, const std::string& out,
            double gap, int horizon, const std::string& solver, bool parallel,
            double time_limit, long node_limit) {
    nwa::CaseFile c = nwa::load_case(case_path);
    nwa::SolverConfig cfg = make_solver_config(solver, gap, horizon, time_limit, node_limit);

    std::vector<nwa::ScenarioKind> kinds;
    if (scenario == "all") {
        kinds = {nwa::ScenarioKind::Baseline, nwa::ScenarioKind::BessOnly,
                 nwa::ScenarioKind::BessDer};
    } else {
        auto k = nwa::parse_scenario(scenario);
        if (!k) throw CLI::ValidationError("unknown scenario: " + scenario);
        kinds = {*k};
    }

    auto run_one = [&](nwa::ScenarioKind k) {
        nwa::SolverConfig local = cfg;
        if (local.backend == nwa::SolverConfig::Backend::External)
            local.workdir += "_" + nwa::to_string(k);
        nwa::ScenarioReport r = nwa::run_scenario(c, k, local);
        r.case_path = case_path;
        return r;
    };

    std::vector<nwa::ScenarioReport> reports;
    if (parallel && kinds.size() > 1) {
        std::vector<std::future<nwa::ScenarioReport>> futs;
        for (auto k : kinds)
            futs.push_back(std::async(std::launch::async, run_one, k));
        for (auto& f : futs) reports.push_back(f.get());
    } else {
        for (auto k : kinds) reports.push_back(run_one(k));
    }

    bool limits = false;
    for (auto& r : reports) {
        std::string path = kinds.size() == 1 ? out : out_path_for(out, r.scenario);
        nwa::save_report(r, path);
        std::printf("%-9s lcc=%.2f gap=%.4f nodes=%ld %.1fs -> %s\n", r.scenario.c_str(),
                    r.total_lcc, r.gap, r.nodes, r.solve_seconds, path.c_str());
        limits = limits || r.limits_hit;
    }
    return limits ? kExitLimits : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DER-as-non-wires-alternatives distribution planning toolkit"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Solve one scenario (or all three) on a case");
    std::string case_path, scenario = "bess-der", out = "report.json", solver = "internal";
    double gap = 0.02, time_limit = 0.0;
    int horizon = 0;
    long node_limit = 0;
    bool parallel = false;
    run->add_option("--case", case_path, "case JSON file")->required();
    run->add_option("--scenario", scenario, "baseline|bess|bess-der|all");
    run->add_option("--out", out, "report output path");
    run->add_option("--gap", gap, "relative MIP gap target");
    run->add_option("--horizon", horizon, "truncate to the first H steps");
    run->add_option("--solver", solver, "internal | external:CMD");
    run->add_option("--time-limit", time_limit, "seconds per scenario");
    run->add_option("--node-limit", node_limit, "branch-and-bound node limit");
    run->add_flag("--parallel", parallel, "run scenarios concurrently");

    // compare
    auto* cmp = app.add_subcommand("compare", "Lifecycle comparison across reports");
    std::vector<std::string> report_paths;
    std::string cmp_out = "table.csv";
    cmp->add_option("reports", report_paths, "report JSON files")->required()->expected(-2);
    cmp->add_option("--out", cmp_out, "CSV output path ('-' for stdout)");

    // cashflow
    auto* cf = app.add_subcommand("cashflow", "Year-by-year discounted cashflow CSV");
    std::string cf_report, cf_out = "cashflow.csv";
    cf->add_option("report", cf_report, "report JSON file")->required();
    cf->add_option("--out", cf_out, "CSV output path ('-' for stdout)");

    // export
    auto* ex = app.add_subcommand("export", "Export artifacts from a report");
    std::string ex_report, ex_what, ex_out = "-";
    ex->add_option("report", ex_report, "report JSON file")->required();
    ex->add_option("--what", ex_what, "price-signal-csv | lp-file | investor-table")->required();
    ex->add_option("--out", ex_out, "output path ('-' for stdout)");

    // inspect
    auto* ins = app.add_subcommand("inspect", "Overload screening report for a case");
    std::string ins_case;
    ins->add_option("--case", ins_case, "case JSON file")->required();

    // validate-kkt
    auto* vk = app.add_subcommand("validate-kkt", "Re-verify a report's KKT block");
    std::string vk_report;
    vk->add_option("report", vk_report, "report JSON file")->required();

    // make-case
    auto* mk = app.add_subcommand("make-case", "Write the bundled synthetic case");
    std::string mk_out = "cases/ieee13_synth";
    mk->add_option("--out", mk_out, "output directory");

    // solve-file (external-solver contract endpoint)
    auto* sf = app.add_subcommand("solve-file", "Solve an LP-format model file");
    std::string sf_model, sf_out;
    double sf_gap = 1e-6;
    sf->add_option("model", sf_model, "model file in the LP interchange format")->required();
    sf->add_option("solution", sf_out, "solution document output path")->required();
    sf->add_option("--gap", sf_gap, "relative MIP gap target");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(case_path, scenario, out, gap, horizon, solver, parallel, time_limit,
                           node_limit);

        if (cmp->parsed()) {
            std::vector<nwa::ScenarioReport> reports;
            for (const auto& p : report_paths) reports.push_back(nwa::load_report(p));
            nwa::ComparisonTable t = nwa::compare(reports);
            write_text(cmp_out, t.to_csv());
            if (cmp_out != "-") std::cout << t.to_text();
            return kExitOk;
        }

        if (cf->parsed()) {
            nwa::ScenarioReport r = nwa::load_report(cf_report);
            write_text(cf_out, nwa::cashflow(r).to_csv());
            return kExitOk;
        }

        if (ex->parsed()) {
            nwa::ScenarioReport r = nwa::load_report(ex_report);
            if (ex_what == "price-signal-csv") {
                write_text(ex_out, nwa::price_signal_csv(r));
            } else if (ex_what == "investor-table") {
                write_text(ex_out, nwa::investor_table_csv(r));
            } else if (ex_what == "lp-file") {
                nwa::CaseFile c = nwa::load_case(r.case_path);
                auto kind = nwa::parse_scenario(r.scenario);
                if (!kind) throw std::runtime_error("report has unknown scenario");
                write_text(ex_out, nwa::export_scenario_lp(c, *kind, r.horizon));
            } else {
                throw CLI::ValidationError("unknown --what: " + ex_what);
            }
            return kExitOk;
        }

        if (ins->parsed()) {
            nwa::CaseFile c = nwa::load_case(ins_case);
            auto entries = nwa::overload_report(c);
            std::printf("%-16s %12s %12s %9s %s\n", "component", "peak_kw", "rating_kw",
                        "percent", "overloaded");
            for (const auto& e : entries)
                std::printf("%-16s %12.1f %12.1f %8.1f%% %s\n", e.component.c_str(), e.peak_kw,
                            e.rating_kw, e.percent, e.overloaded ? "yes" : "no");
            return kExitOk;
        }

        if (vk->parsed()) {
            nwa::ScenarioReport r = nwa::load_report(vk_report);
            nwa::CaseFile c = nwa::load_case(r.case_path);
            nwa::ValidationOutcome v = nwa::validate_report_kkt(c, r);
            std::printf("validate-kkt %s: %s\n", v.pass ? "PASS" : "FAIL", v.detail.c_str());
            return v.pass ? kExitOk : kExitVerification;
        }

        if (mk->parsed()) {
            std::filesystem::create_directories(mk_out);
            nwa::CaseFile c = nwa::make_ieee13_synth();
            nwa::write_case(c, mk_out);
            std::printf("wrote %s/%s.json\n", mk_out.c_str(), c.name.c_str());
            return kExitOk;
        }

        if (sf->parsed()) {
            std::ifstream in(sf_model);
            if (!in) throw std::runtime_error("cannot open " + sf_model);
            std::stringstream buf;
            buf << in.rdbuf();
            nwa::Model m = nwa::parse_model_file(buf.str());
            nwa::SolutionDoc doc;
            nwa::StandardLp lp = m.relax();
            nwa::BnbConfig bc;
            bc.gap_target = sf_gap;
            nwa::MipResult r = nwa::branch_and_bound(lp, bc);
            switch (r.status) {
                case nwa::MipStatus::Optimal: doc.status = nwa::SolStatus::Optimal; break;
                case nwa::MipStatus::Infeasible: doc.status = nwa::SolStatus::Infeasible; break;
                case nwa::MipStatus::Unbounded: doc.status = nwa::SolStatus::Unbounded; break;
                default: doc.status = nwa::SolStatus::LimitHit; break;
            }
            if (doc.status == nwa::SolStatus::Optimal || doc.status == nwa::SolStatus::LimitHit) {
                doc.objective = r.objective + lp.objective_constant;
                for (const auto& v : m.variables())
                    if (!r.x.empty()) doc.primal[v.name] = r.x[v.id];
                for (const auto& con : m.constraints())
                    if (!r.duals.empty()) doc.dual[con.name] = r.duals[con.id];
            }
            std::ofstream outf(sf_out);
            if (!outf) throw std::runtime_error("cannot write " + sf_out);
            outf << nwa::emit_solution_doc(doc);
            if (doc.status == nwa::SolStatus::Infeasible) return kExitInfeasible;
            if (doc.status == nwa::SolStatus::LimitHit) return kExitLimits;
            return kExitOk;
        }
    } catch (const nwa::ScenarioInfeasible& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}
