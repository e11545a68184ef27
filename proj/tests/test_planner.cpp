#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nwa/lindistflow.hpp"
#include "nwa/planner.hpp"
#include "nwa/simplex.hpp"
#include "nwa/synth_case.hpp"

using namespace nwa;

namespace {

// Independent oracle: plain 20-term loop, written apart from pwf().
double pwf_sum(double re, double rc, double disc, int n) {
    double acc = 0.0;
    for (int y = 1; y <= n; ++y)
        acc += std::pow((1.0 + re) * (1.0 + rc) / (1.0 + disc), y);
    return acc;
}

}  // namespace

TEST_CASE("present worth factors") {
    CHECK(pwf(0, 0, 0, 1) == doctest::Approx(1.0));
    CHECK(pwf(0.03, 0.03, 0.15, 20) == doctest::Approx(pwf_sum(0.03, 0.03, 0.15, 20)).epsilon(1e-12));
    CHECK(pwf(0.03, 0.03, 0.15, 20) == doctest::Approx(9.534).epsilon(1e-4));
    CHECK(pwf(0.03, 0.03, 0.10, 20) == doctest::Approx(13.977).epsilon(1e-4));
    CHECK_THROWS(pwf(0, 0, -1.5, 10));
    CHECK_THROWS(pwf(0, 0, 0.1, 0));
}

namespace {

// Minimal case with one BESS site for dispatch arithmetic.
CaseFile bess_case(int T) {
    CaseFile c = make_two_bus_case(0.001, 0.002, 50.0, T);
    c.bess_sites.push_back({1, 500.0, 2000.0});
    c.feeder.buses[1].bess_candidate = true;
    c.econ.planner.bess_efficiency = 0.96;
    return c;
}

}  // namespace

TEST_CASE("soc recursion arithmetic") {
    // eta=0.96: charging 10 kW for 1 h from soc 50 gives 59.6; discharging
    // 9.6 kWh of output drains 10.0 kWh of stored energy.
    CaseFile c = bess_case(2);
    Model m;
    BessHandles h = build_bess(m, c, 2);
    // Pin: soc_0 = 50 (via kwh = 100), charge 10 in step 0, discharge 9.6 in step 1.
    m.fix(h.kwh[1 * 0 + 0], 100.0);  // site 0, phase a
    m.fix(h.chg(0, 0, 0), 10.0);
    m.fix(h.dis(0, 0, 0), 0.0);
    m.fix(h.chg(0, 0, 1), 0.0);
    m.fix(h.dis(0, 0, 1), 9.6);
    m.fix(h.kw[0], 500.0);
    // Drop the terminal tie so the arithmetic is visible: widen by removing
    // the socT row is not possible, so check the recursion rows directly by
    // solving the feasibility system without socT... instead solve with a
    // terminal that matches: soc_2 = 50 requires net zero, so use separate
    // charge/discharge cases.
    SimplexResult r = simplex(m.standard_form());
    // soc_1 = 50 + 0.96*10 = 59.6; soc_2 = 59.6 - 9.6/0.96 = 49.6 != 50
    // so this exact fixing is infeasible against the terminal condition.
    CHECK(r.status == LpStatus::Infeasible);

    // Now let the discharge float: the terminal condition forces the
    // discharge that exactly returns to half charge.
    Model m2;
    BessHandles h2 = build_bess(m2, c, 2);
    m2.fix(h2.kwh[0], 100.0);
    m2.fix(h2.kw[0], 500.0);
    m2.fix(h2.chg(0, 0, 0), 10.0);
    m2.fix(h2.dis(0, 0, 0), 0.0);
    m2.fix(h2.chg(0, 0, 1), 0.0);
    SimplexResult r2 = simplex(m2.standard_form());
    REQUIRE(r2.status == LpStatus::Optimal);
    CHECK(r2.x[h2.state(0, 0, 0)] == doctest::Approx(50.0));
    CHECK(r2.x[h2.state(0, 0, 1)] == doctest::Approx(59.6));
    // soc_2 = 50 => discharge delivers (59.6-50)*0.96 = 9.216 kWh
    CHECK(r2.x[h2.dis(0, 0, 1)] == doctest::Approx(9.216).epsilon(1e-9));
    CHECK(r2.x[h2.state(0, 0, 2)] == doctest::Approx(50.0));
}

TEST_CASE("initial and terminal soc are half the energy rating") {
    CaseFile c = bess_case(4);
    Model m;
    BessHandles h = build_bess(m, c, 4);
    m.fix(h.kwh[0], 100.0);
    SimplexResult r = simplex(m.standard_form());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x[h.state(0, 0, 0)] == doctest::Approx(50.0));
    CHECK(r.x[h.state(0, 0, 4)] == doctest::Approx(50.0));
}

TEST_CASE("switched limits expand with the upgrade binary") {
    CaseFile c = make_two_bus_case(0.001, 0.002, 715.0, 1);
    c.feeder.buses[1].transformer = TransformerSpec{500.0, 300.0, 150000.0};
    Model m;
    InjectionHook hook;
    FlowHandles flows = build_lindistflow(m, c, 1, hook);
    UpgradeHandles up = build_upgrades(m, c, flows, 1);
    REQUIRE(up.z_trfx.size() == 1);

    // z = 0: |load| = 715 > 500 infeasible.
    Model m0 = m;
    m0.fix(up.z_trfx[0], 0.0);
    CHECK(simplex(m0.relax()).status == LpStatus::Infeasible);
    // z = 1: limit 800 >= 715 feasible.
    Model m1 = m;
    m1.fix(up.z_trfx[0], 1.0);
    CHECK(simplex(m1.relax()).status == LpStatus::Optimal);
}

TEST_CASE("export hours carry no energy cost at the head") {
    // Device injects 150 kW against a 100 kW load: P0 = -50, positive part 0.
    CaseFile c = make_two_bus_case(0.001, 0.002, 100.0, 1);
    Model m;
    VarId gen = m.add_continuous("gen", 150.0, 150.0);
    InjectionHook hook;
    hook.load_replaced.assign(2, 0);
    hook.add_real_kw = [&](int bus, int, int, LinExpr& into) {
        if (bus == 1) into.add(gen, 1.0);
    };
    FlowHandles flows = build_lindistflow(m, c, 1, hook);
    HeadCostHandles head = build_head_costs(m, c, flows, 1);
    LinExpr obj;
    obj.add(head.energy_cost);
    obj.add(head.demand_cost);
    m.set_objective(obj);
    SimplexResult r = simplex(m.standard_form());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x[flows.hp(0, 0)] == doctest::Approx(-50.0));
    CHECK(r.x[head.head_pos[0]] == doctest::Approx(0.0));
    CHECK(head.energy_cost.evaluate(r.x) == doctest::Approx(0.0));
}

TEST_CASE("energy cost arithmetic at the head") {
    // 120 kW head at lmp 0.05 with unit pwf: 6 dollars for the step.
    CaseFile c = make_two_bus_case(0.001, 0.002, 120.0, 1);
    c.series.lmp = {0.05};
    Model m;
    InjectionHook hook;
    FlowHandles flows = build_lindistflow(m, c, 1, hook);
    HeadCostHandles head = build_head_costs(m, c, flows, 1);
    LinExpr obj = head.energy_cost;
    m.set_objective(obj);
    SimplexResult r = simplex(m.standard_form());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(head.energy_cost.evaluate(r.x) == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("peak demand tracks the highest head draw in the period") {
    CaseFile c = make_two_bus_case(0.001, 0.002, 90.0, 2);
    c.series.loads[1][0] = {90.0, 110.0};
    c.series.lmp = {0.05, 0.05};
    c.series.period_of_step = {0, 0};
    c.series.demand_price = {50.0};
    Model m;
    InjectionHook hook;
    FlowHandles flows = build_lindistflow(m, c, 2, hook);
    HeadCostHandles head = build_head_costs(m, c, flows, 2);
    LinExpr obj;
    obj.add(head.energy_cost);
    obj.add(head.demand_cost);
    m.set_objective(obj);
    SimplexResult r = simplex(m.standard_form());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x[head.peak[0]] == doctest::Approx(110.0).epsilon(1e-9));
}

TEST_CASE("objective assembly requires every part") {
    CaseFile c = bess_case(1);
    Model m;
    PlannerObjectiveParts parts;
    CHECK_THROWS(assemble_planner_objective(m, parts));
}

TEST_CASE("capex coefficients follow the cost table") {
    // 10 kW / 40 kWh at one site-phase: 10*300 + 40*250 = 13000.
    CaseFile c = bess_case(1);
    Model m;
    BessHandles h = build_bess(m, c, 1);
    std::vector<double> x(m.num_variables(), 0.0);
    x[h.kw[0]] = 10.0;
    x[h.kwh[0]] = 40.0;
    CHECK(h.capex.evaluate(x) == doctest::Approx(13000.0));

    CaseFile ct = make_two_bus_case(0.001, 0.002, 100.0, 1);
    ct.feeder.buses[1].transformer = TransformerSpec{500.0, 300.0, 150000.0};
    Model mt;
    InjectionHook hook;
    FlowHandles flows = build_lindistflow(mt, ct, 1, hook);
    UpgradeHandles up = build_upgrades(mt, ct, flows, 1);
    std::vector<double> xt(mt.num_variables(), 0.0);
    xt[up.z_trfx[0]] = 1.0;
    CHECK(up.capex.evaluate(xt) == doctest::Approx(150000.0));
}
