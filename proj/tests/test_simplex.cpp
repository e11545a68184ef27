#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nwa/model.hpp"
#include "nwa/simplex.hpp"
#include "vertex_oracle.hpp"

using namespace nwa;

TEST_CASE("bound-only maximization picks the upper bound") {
    Model m;
    VarId y = m.add_continuous("y", 0.0, 5.0);
    LinExpr obj;
    obj.add(y, -1.0);
    m.set_objective(obj);
    SimplexResult r = simplex(m.standard_form());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x[y] == doctest::Approx(5.0));
    CHECK(r.objective == doctest::Approx(-5.0));
    // Reduced cost plays the upper-bound dual: -1 at the bound.
    CHECK(r.reduced_costs[y] == doctest::Approx(-1.0));
}

TEST_CASE("equality dual") {
    Model m;
    VarId x = m.add_continuous("x", 0.0, kInf);
    VarId y = m.add_continuous("y", 0.0, kInf);
    LinExpr e;
    e.add(x, 1.0).add(y, 1.0);
    m.add_constraint(e, Sense::Eq, 1.0, "bal");
    LinExpr obj;
    obj.add(x, 1.0).add(y, 1.0);
    m.set_objective(obj);
    SimplexResult r = simplex(m.standard_form());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0));
    CHECK(r.duals[0] == doctest::Approx(1.0));
}

TEST_CASE("infeasible and unbounded detection") {
    {
        Model m;
        m.add_continuous("x", 0.0, 1.0);
        m.add_continuous("y", 0.0, 1.0);
        LinExpr e;
        e.add(0, 1.0).add(1, 1.0);
        m.add_constraint(e, Sense::Eq, 3.0, "c");
        CHECK(simplex(m.standard_form()).status == LpStatus::Infeasible);
    }
    {
        Model m;
        m.add_continuous("x", 0.0, kInf);
        LinExpr obj;
        obj.add(0, -1.0);
        m.set_objective(obj);
        CHECK(simplex(m.standard_form()).status == LpStatus::Unbounded);
    }
}

TEST_CASE("twenty random LPs match the vertex-enumeration oracle") {
    std::mt19937 rng(20240518);
    int optimal_checked = 0;
    int trial = 0;
    while (optimal_checked < 20) {
        ++trial;
        REQUIRE(trial < 500);
        std::uniform_int_distribution<int> nv(1, 6), nc(1, 4), sense(0, 2);
        std::uniform_real_distribution<double> coef(-5, 5), rhs(-8, 8), bound(0, 6);
        Model m;
        int n = nv(rng);
        for (int i = 0; i < n; ++i) {
            double lo = -bound(rng), hi = bound(rng);
            if (lo > hi) std::swap(lo, hi);
            m.add_continuous("x" + std::to_string(i), lo, hi);
        }
        int k = nc(rng);
        for (int j = 0; j < k; ++j) {
            LinExpr e;
            bool any = false;
            for (int i = 0; i < n; ++i)
                if (rng() % 100 < 60) {
                    e.add(i, coef(rng));
                    any = true;
                }
            if (!any) e.add(static_cast<int>(rng() % n), coef(rng));
            m.add_constraint(e, static_cast<Sense>(sense(rng)), rhs(rng), "c" + std::to_string(j));
        }
        LinExpr obj;
        for (int i = 0; i < n; ++i) obj.add(i, coef(rng));
        m.set_objective(obj);

        StandardLp lp = m.standard_form();
        SimplexResult r = simplex(lp);
        testing::OracleResult oracle = testing::enumerate_lp(lp);
        if (r.status == LpStatus::Optimal) {
            REQUIRE(oracle.feasible);
            CHECK(r.objective ==
                  doctest::Approx(oracle.objective).epsilon(1e-8).scale(1 + std::abs(oracle.objective)));
            CHECK(r.duality_gap_rel <= 1e-7);
            ++optimal_checked;
        } else if (r.status == LpStatus::Infeasible) {
            CHECK_FALSE(oracle.feasible);
        }
    }
}

TEST_CASE("strong duality audit on every optimal result") {
    std::mt19937 rng(7711);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_real_distribution<double> coef(-3, 3), rhs(-4, 4);
        Model m;
        for (int i = 0; i < 5; ++i) m.add_continuous("x" + std::to_string(i), 0.0, 3.0);
        for (int j = 0; j < 3; ++j) {
            LinExpr e;
            for (int i = 0; i < 5; ++i) e.add(i, coef(rng));
            m.add_constraint(e, j % 2 ? Sense::Le : Sense::Ge, rhs(rng), "c" + std::to_string(j));
        }
        LinExpr obj;
        for (int i = 0; i < 5; ++i) obj.add(i, coef(rng));
        m.set_objective(obj);
        SimplexResult r = simplex(m.standard_form());
        if (r.status == LpStatus::Optimal) CHECK(r.duality_gap_rel <= 1e-7);
    }
}

TEST_CASE("warm start from a tightened parent matches cold solve") {
    Model m;
    for (int i = 0; i < 6; ++i) m.add_continuous("x" + std::to_string(i), 0.0, 4.0);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> coef(-3, 3);
    for (int j = 0; j < 4; ++j) {
        LinExpr e;
        for (int i = 0; i < 6; ++i) e.add(i, coef(rng));
        m.add_constraint(e, Sense::Le, 5.0, "c" + std::to_string(j));
    }
    LinExpr obj;
    for (int i = 0; i < 6; ++i) obj.add(i, coef(rng));
    m.set_objective(obj);
    StandardLp lp = m.standard_form();
    SimplexResult base = simplex(lp);
    REQUIRE(base.status == LpStatus::Optimal);

    StandardLp child = lp;
    child.lb[2] = 1.0;
    child.ub[2] = 1.0;
    SimplexOptions warm;
    warm.start = &base.vstat;
    SimplexResult wr = simplex(child, warm);
    SimplexResult cr = simplex(child);
    REQUIRE(wr.status == cr.status);
    if (wr.status == LpStatus::Optimal)
        CHECK(wr.objective == doctest::Approx(cr.objective).epsilon(1e-9));
}

TEST_CASE("determinism: identical inputs give identical pivots and solutions") {
    Model m;
    std::mt19937 rng(5150);
    std::uniform_real_distribution<double> coef(-2, 2);
    for (int i = 0; i < 8; ++i) m.add_continuous("x" + std::to_string(i), 0.0, 2.0);
    for (int j = 0; j < 5; ++j) {
        LinExpr e;
        for (int i = 0; i < 8; ++i) e.add(i, coef(rng));
        m.add_constraint(e, Sense::Le, 3.0, "c" + std::to_string(j));
    }
    LinExpr obj;
    for (int i = 0; i < 8; ++i) obj.add(i, coef(rng));
    m.set_objective(obj);
    StandardLp lp = m.standard_form();
    SimplexResult a = simplex(lp);
    SimplexResult b = simplex(lp);
    CHECK(a.iterations == b.iterations);
    CHECK(a.objective == b.objective);
    CHECK(a.x == b.x);
    CHECK(a.vstat == b.vstat);
}

TEST_CASE("degenerate corner still terminates (Bland fallback)") {
    // Classic degenerate cube corner with redundant constraints.
    Model m;
    VarId x = m.add_continuous("x", 0.0, kInf);
    VarId y = m.add_continuous("y", 0.0, kInf);
    VarId z = m.add_continuous("z", 0.0, kInf);
    auto con = [&](double a, double b, double c, double r, const char* n) {
        LinExpr e;
        e.add(x, a).add(y, b).add(z, c);
        m.add_constraint(e, Sense::Le, r, n);
    };
    con(0.5, -5.5, -2.5, 0.0, "c1");
    con(0.5, -1.5, -0.5, 0.0, "c2");
    con(1.0, 0.0, 0.0, 1.0, "c3");
    LinExpr obj;
    obj.add(x, -10.0).add(y, 57.0).add(z, 9.0);
    m.set_objective(obj);
    SimplexResult r = simplex(m.standard_form());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-10.0));  // x=1 vertex (Beale example family)
}
