#include "nwa/model.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace nwa {

LinExpr& LinExpr::add(VarId v, double coef) {
    if (coef != 0.0) {
        terms_.push_back({v, coef});
        dirty_ = true;
    }
    return *this;
}

LinExpr& LinExpr::add(const LinExpr& other, double scale) {
    if (scale == 0.0) return *this;
    terms_.reserve(terms_.size() + other.terms_.size());
    for (const Term& t : other.terms_) terms_.push_back({t.var, t.coef * scale});
    constant_ += scale * other.constant_;
    dirty_ = true;
    return *this;
}

void LinExpr::normalize(double drop_tol) {
    if (!dirty_ && drop_tol == 0.0) return;
    std::sort(terms_.begin(), terms_.end(),
              [](const Term& a, const Term& b) { return a.var < b.var; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < terms_.size();) {
        VarId v = terms_[i].var;
        double sum = 0.0;
        while (i < terms_.size() && terms_[i].var == v) sum += terms_[i++].coef;
        if (std::abs(sum) > drop_tol) terms_[out++] = {v, sum};
    }
    terms_.resize(out);
    dirty_ = false;
}

double LinExpr::evaluate(const std::vector<double>& point) const {
    double acc = constant_;
    for (const Term& t : terms_) acc += t.coef * point.at(t.var);
    return acc;
}

void Model::check_mutable() const {
    if (frozen_) throw std::logic_error("model is frozen");
}

VarId Model::add_variable(const std::string& name, VarKind kind, double lb, double ub) {
    check_mutable();
    if (name.empty()) throw std::invalid_argument("variable name must not be empty");
    if (var_names_.count(name))
        throw std::invalid_argument("duplicate variable name: " + name);
    if (std::isnan(lb) || std::isnan(ub) || lb > ub)
        throw std::invalid_argument("invalid bounds for " + name);
    if (kind == VarKind::Binary && (lb != 0.0 || ub != 1.0))
        throw std::invalid_argument("binary variable must have bounds [0,1]: " + name);
    VarId id = static_cast<VarId>(vars_.size());
    vars_.push_back({id, name, kind, lb, ub});
    var_names_.emplace(name, id);
    return id;
}

ConId Model::add_constraint(LinExpr expr, Sense sense, double rhs, const std::string& name,
                            const std::string& dual_tag) {
    check_mutable();
    if (!std::isfinite(rhs)) throw std::invalid_argument("non-finite rhs for " + name);
    if (con_names_.count(name))
        throw std::invalid_argument("duplicate constraint name: " + name);
    expr.normalize();
    for (const Term& t : expr.terms())
        if (t.var < 0 || t.var >= num_variables())
            throw std::invalid_argument("unknown variable id in constraint " + name);
    // Fold the expression constant into the right-hand side.
    double adj_rhs = rhs - expr.constant();
    expr.constant_ = 0.0;
    if (!std::isfinite(adj_rhs)) throw std::invalid_argument("non-finite rhs for " + name);
    ConId id = static_cast<ConId>(cons_.size());
    cons_.push_back({id, name, std::move(expr), sense, adj_rhs, dual_tag});
    con_names_.emplace(name, id);
    return id;
}

void Model::set_objective(LinExpr expr) {
    check_mutable();
    expr.normalize();
    for (const Term& t : expr.terms())
        if (t.var < 0 || t.var >= num_variables())
            throw std::invalid_argument("unknown variable id in objective");
    objective_ = std::move(expr);
}

void Model::add_objective_term(VarId v, double coef) {
    check_mutable();
    if (v < 0 || v >= num_variables())
        throw std::invalid_argument("unknown variable id in objective");
    objective_.add(v, coef);
    objective_.normalize();
}

void Model::add_objective(const LinExpr& e, double scale) {
    check_mutable();
    for (const Term& t : e.terms())
        if (t.var < 0 || t.var >= num_variables())
            throw std::invalid_argument("unknown variable id in objective");
    objective_.add(e, scale);
    objective_.normalize();
}

void Model::set_bounds(VarId v, double lb, double ub) {
    check_mutable();
    if (v < 0 || v >= num_variables()) throw std::invalid_argument("unknown variable id");
    if (std::isnan(lb) || std::isnan(ub) || lb > ub)
        throw std::invalid_argument("invalid bounds for " + vars_[v].name);
    vars_[v].lb = lb;
    vars_[v].ub = ub;
}

int Model::num_binaries() const {
    int n = 0;
    for (const Variable& v : vars_)
        if (v.kind == VarKind::Binary) ++n;
    return n;
}

VarId Model::find_variable(const std::string& name) const {
    auto it = var_names_.find(name);
    return it == var_names_.end() ? -1 : it->second;
}

ConId Model::find_constraint(const std::string& name) const {
    auto it = con_names_.find(name);
    return it == con_names_.end() ? -1 : it->second;
}

StandardLp Model::standard_form() const { return to_standard(false); }
StandardLp Model::relax() const { return to_standard(true); }

StandardLp Model::to_standard(bool allow_binaries) const {
    StandardLp lp;
    const int n_var = num_variables();
    const int n_con = num_constraints();
    int n_slack = 0;
    for (const Constraint& c : cons_)
        if (c.sense != Sense::Eq) ++n_slack;

    const int n_col = n_var + n_slack;
    lp.c.assign(n_col, 0.0);
    lp.lb.resize(n_col);
    lp.ub.resize(n_col);
    lp.col_to_var.assign(n_col, -1);
    lp.var_to_col.resize(n_var);
    lp.row_to_con.resize(n_con);
    lp.slack_of_row.assign(n_con, -1);
    lp.w.resize(n_con);
    lp.objective_constant = objective_.constant();

    for (VarId v = 0; v < n_var; ++v) {
        const Variable& var = vars_[v];
        if (var.kind == VarKind::Binary) {
            if (!allow_binaries)
                throw std::invalid_argument("standard_form: binary variable present: " + var.name);
            lp.integer_cols.push_back(v);
        }
        lp.lb[v] = var.lb;
        lp.ub[v] = var.ub;
        lp.col_to_var[v] = v;
        lp.var_to_col[v] = v;
    }
    for (const Term& t : objective_.terms()) lp.c[t.var] = t.coef;

    // Column-wise assembly: count, then fill.
    std::vector<int> col_count(n_col, 0);
    int slack = n_var;
    std::vector<int> row_slack(n_con, -1);
    for (const Constraint& c : cons_) {
        for (const Term& t : c.expr.terms()) ++col_count[t.var];
        if (c.sense != Sense::Eq) {
            row_slack[c.id] = slack;
            ++col_count[slack];
            ++slack;
        }
    }
    lp.V.rows = n_con;
    lp.V.cols = n_col;
    lp.V.col_ptr.assign(n_col + 1, 0);
    for (int j = 0; j < n_col; ++j) lp.V.col_ptr[j + 1] = lp.V.col_ptr[j] + col_count[j];
    lp.V.row_idx.resize(lp.V.col_ptr.back());
    lp.V.val.resize(lp.V.col_ptr.back());
    std::vector<int> fill = lp.V.col_ptr;

    for (const Constraint& c : cons_) {
        lp.row_to_con[c.id] = c.id;
        lp.w[c.id] = c.rhs;
        for (const Term& t : c.expr.terms()) {
            int p = fill[t.var]++;
            lp.V.row_idx[p] = c.id;
            lp.V.val[p] = t.coef;
        }
        if (c.sense != Sense::Eq) {
            int s = row_slack[c.id];
            lp.slack_of_row[c.id] = s;
            // a'x <= r  ->  a'x + s = r, s >= 0
            // a'x >= r  ->  a'x - s = r, s >= 0
            int p = fill[s]++;
            lp.V.row_idx[p] = c.id;
            lp.V.val[p] = (c.sense == Sense::Le) ? 1.0 : -1.0;
            lp.lb[s] = 0.0;
            lp.ub[s] = kInf;
            lp.col_to_var[s] = -1;
        }
    }
    return lp;
}

std::vector<std::vector<double>> SparseMatrix::dense() const {
    std::vector<std::vector<double>> d(rows, std::vector<double>(cols, 0.0));
    for (int j = 0; j < cols; ++j)
        for (int p = col_ptr[j]; p < col_ptr[j + 1]; ++p) d[row_idx[p]][j] = val[p];
    return d;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace nwa
