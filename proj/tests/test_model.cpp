#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nwa/lp_format.hpp"
#include "nwa/model.hpp"

using namespace nwa;

TEST_CASE("add_variable basics") {
    Model m;
    VarId x = m.add_continuous("x", 0, 10);
    CHECK(x == 0);
    CHECK(m.variable(x).lb == 0);
    CHECK(m.variable(x).ub == 10);
    VarId z = m.add_binary("z");
    CHECK(m.variable(z).kind == VarKind::Binary);
    CHECK_THROWS(m.add_continuous("x", 0, 1));       // duplicate name
    CHECK_THROWS(m.add_continuous("bad", 2.0, 1.0)); // lb > ub
    CHECK_THROWS(m.add_variable("zz", VarKind::Binary, 0.0, 2.0));
}

TEST_CASE("add_constraint basics") {
    Model m;
    VarId x = m.add_continuous("x", 0, kInf);
    VarId y = m.add_continuous("y", 0, kInf);
    LinExpr e;
    e.add(x, 1.0).add(y, 2.0);
    ConId c = m.add_constraint(e, Sense::Eq, 3.0, "c1");
    CHECK(m.constraint(c).sense == Sense::Eq);
    CHECK(m.find_constraint("c1") == c);

    LinExpr bad;
    bad.add(99, 1.0);
    CHECK_THROWS(m.add_constraint(bad, Sense::Le, 1.0, "c2"));
    LinExpr ok;
    ok.add(x, 1.0);
    CHECK_THROWS(m.add_constraint(ok, Sense::Le, kInf, "c3"));  // infinite rhs
}

TEST_CASE("linexpr evaluation is exact for rational inputs") {
    LinExpr e;
    e.add(0, 0.25).add(1, -0.5).add(0, 0.75);  // combines terms
    e.add_constant(2.0);
    e.normalize();
    std::vector<double> pt{4.0, 8.0};
    CHECK(e.evaluate(pt) == doctest::Approx(0.25 * 4 + 0.75 * 4 - 0.5 * 8 + 2.0).epsilon(1e-12));
    CHECK(e.terms().size() == 2);  // merged duplicate
}

TEST_CASE("standard form adds slacks and carries bounds") {
    Model m;
    VarId x = m.add_continuous("x", 0.0, kInf);
    LinExpr e;
    e.add(x, 1.0);
    m.add_constraint(e, Sense::Le, 5.0, "cap");
    StandardLp lp = m.standard_form();
    CHECK(lp.num_rows() == 1);
    CHECK(lp.num_cols() == 2);  // x + slack
    auto dense = lp.dense_v();
    CHECK(dense[0][0] == 1.0);
    CHECK(dense[0][1] == 1.0);  // nonnegative slack on <=
    CHECK(lp.lb[1] == 0.0);
    CHECK(lp.ub[1] == kInf);

    Model m2;
    VarId a = m2.add_continuous("a", 0.0, 1.0);
    VarId b = m2.add_continuous("b", -kInf, kInf);
    LinExpr e2;
    e2.add(a, 1.0).add(b, 1.0);
    m2.add_constraint(e2, Sense::Eq, 2.0, "bal");
    StandardLp lp2 = m2.standard_form();
    CHECK(lp2.num_cols() == 2);  // no slack on equality
    CHECK(lp2.w[0] == 2.0);
    CHECK(lp2.lb[0] == 0.0);
    CHECK(lp2.ub[0] == 1.0);
}

TEST_CASE("standard form rejects binaries") {
    Model m;
    m.add_binary("z");
    CHECK_THROWS(m.standard_form());
    CHECK_NOTHROW(m.relax());
}

namespace {

Model random_model(std::mt19937& rng, int max_vars = 10) {
    std::uniform_int_distribution<int> nv(1, max_vars), nc(0, 6), sense(0, 2);
    std::uniform_real_distribution<double> coef(-9, 9), rhs(-20, 20), bound(0, 15);
    Model m;
    int n = nv(rng);
    for (int i = 0; i < n; ++i) {
        double lo = -bound(rng), hi = bound(rng);
        if (lo > hi) std::swap(lo, hi);
        int shape = static_cast<int>(rng() % 4);
        if (shape == 1) hi = kInf;
        if (shape == 2) lo = -kInf;
        m.add_continuous("v" + std::to_string(i), lo, hi);
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
    for (int i = 0; i < n; ++i)
        if (rng() % 2) obj.add(i, coef(rng));
    m.set_objective(obj);
    return m;
}

// Structural equality of two models' constraint sets and bounds.
void check_equivalent(const Model& a, const Model& b, double tol = 1e-9) {
    REQUIRE(a.num_variables() == b.num_variables());
    REQUIRE(a.num_constraints() == b.num_constraints());
    for (const Variable& v : a.variables()) {
        VarId w = b.find_variable(v.name);
        REQUIRE(w >= 0);
        const Variable& bv = b.variable(w);
        CHECK(v.kind == bv.kind);
        if (std::isfinite(v.lb)) CHECK(bv.lb == doctest::Approx(v.lb).epsilon(tol));
        else CHECK(v.lb == bv.lb);
        if (std::isfinite(v.ub)) CHECK(bv.ub == doctest::Approx(v.ub).epsilon(tol));
        else CHECK(v.ub == bv.ub);
    }
    for (const Constraint& c : a.constraints()) {
        ConId d = b.find_constraint(c.name);
        REQUIRE(d >= 0);
        const Constraint& bc = b.constraint(d);
        CHECK(c.sense == bc.sense);
        CHECK(bc.rhs == doctest::Approx(c.rhs).epsilon(tol));
        REQUIRE(c.expr.terms().size() == bc.expr.terms().size());
        for (std::size_t i = 0; i < c.expr.terms().size(); ++i) {
            const Term& t = c.expr.terms()[i];
            const Term& u = bc.expr.terms()[i];
            CHECK(a.variable(t.var).name == b.variable(u.var).name);
            CHECK(u.coef == doctest::Approx(t.coef).epsilon(tol));
        }
    }
}

}  // namespace

TEST_CASE("emit_model_file sections and trivial objective") {
    Model m;
    VarId x = m.add_continuous("x", 1.0, kInf);
    LinExpr obj;
    obj.add(x, 1.0);
    m.set_objective(obj);
    std::string text = emit_model_file(m);
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("Subject To") != std::string::npos);
    CHECK(text.find("Bounds") != std::string::npos);
    CHECK(text.find("End") != std::string::npos);

    Model empty;
    empty.add_continuous("x", 0, 1);
    std::string e = emit_model_file(empty);
    CHECK(e.find("obj: 0") != std::string::npos);
}

TEST_CASE("emit then parse is the identity on the constraint set") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        Model m = random_model(rng);
        Model back = parse_model_file(emit_model_file(m));
        check_equivalent(m, back);
        // Objective preserved too.
        CHECK(back.objective().terms().size() == m.objective().terms().size());
    }
}

TEST_CASE("binary section round trips") {
    Model m;
    m.add_binary("pick");
    VarId x = m.add_continuous("x", 0, 4);
    LinExpr e;
    e.add(0, 2.0).add(x, 1.0);
    m.add_constraint(e, Sense::Le, 5.0, "c");
    Model back = parse_model_file(emit_model_file(m));
    CHECK(back.variable(back.find_variable("pick")).kind == VarKind::Binary);
}

TEST_CASE("solution document round trip") {
    SolutionDoc doc;
    doc.status = SolStatus::Optimal;
    doc.objective = -12.5;
    doc.primal["x"] = 1.25;
    doc.primal["y"] = 0.0;
    doc.dual["c0"] = -3.5;
    SolutionDoc back = parse_solution_doc(emit_solution_doc(doc));
    CHECK(back.status == SolStatus::Optimal);
    CHECK(back.objective == doctest::Approx(-12.5));
    CHECK(back.primal.at("x") == doctest::Approx(1.25));
    CHECK(back.dual.at("c0") == doctest::Approx(-3.5));
    CHECK_THROWS(parse_solution_doc("objective 3\n"));  // no status
}

TEST_CASE("frozen model rejects edits") {
    Model m;
    VarId x = m.add_continuous("x", 0, 1);
    m.freeze();
    CHECK_THROWS(m.set_bounds(x, 0, 2));
    CHECK_THROWS(m.add_continuous("y", 0, 1));
}
