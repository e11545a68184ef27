#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "nwa/lindistflow.hpp"
#include "nwa/simplex.hpp"
#include "nwa/synth_case.hpp"

using namespace nwa;

namespace {

Line single_phase_line(double r_ohm, double x_ohm) {
    Line l;
    l.index = 0;
    l.from = 0;
    l.to = 1;
    l.name = "a-b";
    l.phases = parse_phases("a");
    l.z_ohm[0][0] = {r_ohm, x_ohm};
    l.rating_kw_per_phase = 1000.0;
    return l;
}

// Solve the flow model with no objective: any feasible point works, and the
// equalities pin the solution uniquely for a pure-load radial case.
SimplexResult solve_flows(Model& m) {
    SimplexResult r = simplex(m.standard_form());
    REQUIRE(r.status == LpStatus::Optimal);
    return r;
}

}  // namespace

TEST_CASE("single-phase sensitivity reduces to -2r / -2x") {
    // z_pu = 0.1 + j0.2 on unit bases.
    Line l = single_phase_line(0.1, 0.2);
    SensitivityMatrices s = sensitivity_matrices(l, 1.0);
    CHECK(s.mp[0][0] == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(s.mq[0][0] == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(s.mp[1][1] == 0.0);  // absent phases zeroed
}

TEST_CASE("gamma off-diagonal phase rotation") {
    // Gamma_ab = conj(alpha_b) = -0.5 + j0.866...
    Line l;
    l.index = 0;
    l.from = 0;
    l.to = 1;
    l.name = "x";
    l.phases = parse_phases("ab");
    l.z_ohm[0][0] = l.z_ohm[1][1] = {0.0, 1.0};
    l.z_ohm[0][1] = l.z_ohm[1][0] = {1.0, 0.0};  // pure real mutual
    SensitivityMatrices s = sensitivity_matrices(l, 1.0);
    // M^P_ab = -2 Re(Gamma_ab * conj(1)) = -2 * (-0.5) = 1.0
    CHECK(s.mp[0][1] == doctest::Approx(1.0).epsilon(1e-9));
    // M^Q_ab = 2 Im(Gamma_ab) = 2 * 0.86602...
    CHECK(s.mq[0][1] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("balanced three-phase diagonal impedance gives -2r diagonals") {
    Line l;
    l.index = 0;
    l.from = 0;
    l.to = 1;
    l.name = "x";
    l.phases = parse_phases("abc");
    for (int p = 0; p < 3; ++p) l.z_ohm[p][p] = {0.05, 0.12};
    SensitivityMatrices s = sensitivity_matrices(l, 1.0);
    for (int p = 0; p < 3; ++p) {
        CHECK(s.mp[p][p] == doctest::Approx(-0.10).epsilon(1e-12));
        CHECK(s.mq[p][p] == doctest::Approx(-0.24).epsilon(1e-12));
    }
}

TEST_CASE("two-bus hand-solved case") {
    // Load 100 kW, r_pu = 0.01, x_pu = 0.02, 1 MW base:
    // P01 = 100 kW, v1 = 1 - 2*0.01*0.1 = 0.998 pu^2.
    CaseFile c = make_two_bus_case(0.01, 0.02, 100.0, 1);
    Model m;
    InjectionHook hook;
    FlowHandles h = build_lindistflow(m, c, 1, hook);
    SimplexResult r = solve_flows(m);
    int line = 0;
    CHECK(r.x[h.lp(line, 0, 0)] == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(r.x[h.v(1, 0, 0)] == doctest::Approx(0.998).epsilon(1e-9));
    CHECK(r.x[h.hp(0, 0)] == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("zero load everywhere gives zero flows and flat voltage") {
    CaseFile c = make_two_bus_case(0.01, 0.02, 0.0, 3);
    Model m;
    InjectionHook hook;
    FlowHandles h = build_lindistflow(m, c, 3, hook);
    SimplexResult r = solve_flows(m);
    for (int t = 0; t < 3; ++t) {
        CHECK(r.x[h.lp(0, 0, t)] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(r.x[h.v(1, 0, t)] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("structural count on the bundled case at 24 steps") {
    CaseFile c = make_ieee13_synth();
    Model m;
    InjectionHook hook;
    FlowHandles h = build_lindistflow(m, c, 24, hook);
    int node_phases = 0;
    for (const Bus& b : c.feeder.buses)
        if (b.index != c.feeder.substation) node_phases += phase_count(b.phases);
    int line_phases = 0;
    for (const Line& l : c.feeder.lines) line_phases += phase_count(l.phases);
    CHECK(static_cast<int>(h.p_balance_rows.size() + h.q_balance_rows.size()) ==
          2 * node_phases * 24);
    CHECK(static_cast<int>(h.voltage_rows.size()) == line_phases * 24);
}

TEST_CASE("balance residual reporting catches a perturbed flow") {
    CaseFile c = make_two_bus_case(0.01, 0.02, 100.0, 1);
    Model m;
    InjectionHook hook;
    FlowHandles h = build_lindistflow(m, c, 1, hook);
    SimplexResult r = solve_flows(m);
    BalanceReport ok = validate_power_balance(m, h, r.x, 1e-6);
    CHECK(ok.pass);
    CHECK(ok.max_p_residual <= 1e-8);

    std::vector<double> bad = r.x;
    bad[h.lp(0, 0, 0)] += 1.0;  // 1 kW perturbation
    BalanceReport rep = validate_power_balance(m, h, bad, 1e-6);
    CHECK_FALSE(rep.pass);
    CHECK(rep.max_p_residual == doctest::Approx(1.0).epsilon(1e-9));

    std::vector<double> short_x(3, 0.0);
    CHECK_THROWS(validate_power_balance(m, h, short_x, 1e-6));
}

TEST_CASE("voltage monotonicity along a uniform feeder") {
    // Chain of 4 buses with equal nonnegative loads: v non-increasing.
    CaseFile c;
    c.name = "chain";
    Feeder& f = c.feeder;
    f.base_kv = 2.4;
    f.base_kva = 1000.0;
    f.vmin_pu2 = 0.5;
    f.vmax_pu2 = 1.5;
    for (int i = 0; i < 4; ++i) {
        Bus b;
        b.index = i;
        b.id = "n" + std::to_string(i);
        b.phases = parse_phases("a");
        f.buses.push_back(b);
    }
    f.substation = 0;
    for (int i = 0; i < 3; ++i) {
        Line l;
        l.index = i;
        l.from = i;
        l.to = i + 1;
        l.name = f.buses[i].id + "-" + f.buses[i + 1].id;
        l.phases = parse_phases("a");
        l.z_ohm[0][0] = {0.05, 0.1};
        l.rating_kw_per_phase = 1e5;
        f.lines.push_back(l);
    }
    c.series.steps = 1;
    c.series.loads.resize(4);
    for (int i = 1; i < 4; ++i) c.series.loads[i][0] = {50.0};
    c.series.lmp = {0.05};
    c.series.production.resize(4);
    c.series.period_of_step = {0};
    c.series.demand_price = {0.0};

    Model m;
    InjectionHook hook;
    FlowHandles h = build_lindistflow(m, c, 1, hook);
    SimplexResult r = solve_flows(m);
    double prev = 1.0;
    for (int i = 1; i < 4; ++i) {
        double v = r.x[h.v(i, 0, 0)];
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("three-phase machinery reproduces the scalar model on one phase") {
    // A 1-phase line processed through the 3x3 path must match the scalar
    // LinDistFlow drop to 1e-12.
    CaseFile c = make_two_bus_case(0.013, 0.037, 250.0, 1);
    Model m;
    InjectionHook hook;
    FlowHandles h = build_lindistflow(m, c, 1, hook);
    SimplexResult r = solve_flows(m);
    double expected = 1.0 - 2.0 * (0.013 * 0.25 + 0.037 * 0.0);
    CHECK(r.x[h.v(1, 0, 0)] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("conservation: head power equals total load minus device net") {
    // Lossless model: with a device injecting at a bus, the head drops by
    // exactly the injection.
    CaseFile c = make_two_bus_case(0.01, 0.02, 100.0, 1);
    Model m;
    VarId gen = m.add_continuous("gen", 30.0, 30.0);
    InjectionHook hook;
    hook.load_replaced.assign(2, 0);
    hook.add_real_kw = [&](int bus, int, int, LinExpr& into) {
        if (bus == 1) into.add(gen, 1.0);
    };
    FlowHandles h = build_lindistflow(m, c, 1, hook);
    SimplexResult r = solve_flows(m);
    CHECK(r.x[h.hp(0, 0)] == doctest::Approx(70.0).epsilon(1e-9));
}
