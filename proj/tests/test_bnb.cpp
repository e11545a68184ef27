#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nwa/branch_and_bound.hpp"
#include "nwa/model.hpp"

using namespace nwa;

namespace {

// 3-item knapsack as a minimization: maximize value = minimize -value.
Model knapsack() {
    Model m;
    VarId a = m.add_binary("a");
    VarId b = m.add_binary("b");
    VarId c = m.add_binary("c");
    LinExpr w;
    w.add(a, 4.0).add(b, 3.0).add(c, 2.0);
    m.add_constraint(w, Sense::Le, 5.0, "weight");
    LinExpr obj;
    obj.add(a, -5.0).add(b, -4.0).add(c, -2.0);
    m.set_objective(obj);
    return m;
}

double enumerate_knapsack() {
    double best = 0.0;
    const double w[3] = {4, 3, 2}, v[3] = {5, 4, 2};
    for (int mask = 0; mask < 8; ++mask) {
        double tw = 0, tv = 0;
        for (int i = 0; i < 3; ++i)
            if ((mask >> i) & 1) {
                tw += w[i];
                tv += v[i];
            }
        if (tw <= 5.0) best = std::max(best, tv);
    }
    return -best;
}

}  // namespace

TEST_CASE("knapsack matches full enumeration exactly") {
    Model m = knapsack();
    BnbConfig cfg;
    cfg.gap_target = 1e-9;
    MipResult r = branch_and_bound(m.relax(), cfg);
    REQUIRE(r.status == MipStatus::Optimal);
    CHECK(r.objective == doctest::Approx(enumerate_knapsack()).epsilon(1e-12));
    for (int c : m.relax().integer_cols) {
        double v = r.x[c];
        CHECK(std::abs(v - std::round(v)) <= 1e-6);
    }
}

TEST_CASE("all binaries fixed by bounds reduces to plain simplex") {
    Model m = knapsack();
    m.fix(0, 1.0);
    m.fix(1, 0.0);
    m.fix(2, 0.0);
    MipResult r = branch_and_bound(m.relax());
    REQUIRE(r.status == MipStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-5.0));
    CHECK(r.nodes == 1);
    CHECK(r.gap <= 1e-12);
}

TEST_CASE("infeasible relaxation reported") {
    Model m;
    VarId z = m.add_binary("z");
    LinExpr e;
    e.add(z, 1.0);
    m.add_constraint(e, Sense::Ge, 2.0, "impossible");
    MipResult r = branch_and_bound(m.relax());
    CHECK(r.status == MipStatus::Infeasible);
}

TEST_CASE("binary forced fractional by constraint gets branched") {
    // x + y = 1.5 with x binary, y in [0, 0.6]: x must be 1, y = 0.5.
    Model m;
    VarId x = m.add_binary("x");
    VarId y = m.add_continuous("y", 0.0, 0.6);
    LinExpr e;
    e.add(x, 1.0).add(y, 1.0);
    m.add_constraint(e, Sense::Eq, 1.5, "mix");
    LinExpr obj;
    obj.add(x, 1.0).add(y, 1.0);
    m.set_objective(obj);
    MipResult r = branch_and_bound(m.relax());
    REQUIRE(r.status == MipStatus::Optimal);
    CHECK(r.x[x] == doctest::Approx(1.0));
    CHECK(r.x[y] == doctest::Approx(0.5));
}

TEST_CASE("gap accounting is honest") {
    Model m = knapsack();
    BnbConfig cfg;
    cfg.gap_target = 0.5;  // loose: may stop early, gap must be reported
    MipResult r = branch_and_bound(m.relax(), cfg);
    REQUIRE(r.status == MipStatus::Optimal);
    CHECK(r.gap >= 0.0);
    CHECK(r.gap <= 0.5 + 1e-12);
    CHECK(r.best_bound <= r.objective + 1e-9);
}

TEST_CASE("deterministic across repeated runs") {
    Model m = knapsack();
    MipResult a = branch_and_bound(m.relax());
    MipResult b = branch_and_bound(m.relax());
    CHECK(a.nodes == b.nodes);
    CHECK(a.objective == b.objective);
    CHECK(a.x == b.x);
}
