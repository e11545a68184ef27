#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace nwa {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using VarId = int;
using ConId = int;

enum class VarKind { Continuous, Binary };
enum class Sense { Le, Eq, Ge };

/// One linear term `coef * var`.
struct Term {
    VarId var = -1;
    double coef = 0.0;
};

/// Linear expression: sum of terms plus a constant. Stored normalized
/// (terms sorted by variable id, no zero coefficients, no duplicates).
class LinExpr {
public:
    LinExpr() = default;
    explicit LinExpr(double constant) : constant_(constant) {}

    LinExpr& add(VarId v, double coef);
    LinExpr& add(const LinExpr& other, double scale = 1.0);
    LinExpr& add_constant(double c) {
        constant_ += c;
        return *this;
    }

    /// Drops zero coefficients, merges duplicates, sorts by id.
    void normalize(double drop_tol = 0.0);

    double evaluate(const std::vector<double>& point) const;

    const std::vector<Term>& terms() const { return terms_; }
    double constant() const { return constant_; }
    bool empty() const { return terms_.empty(); }

private:
    std::vector<Term> terms_;
    double constant_ = 0.0;
    bool dirty_ = false;

    friend class Model;
};

struct Variable {
    VarId id = -1;
    std::string name;
    VarKind kind = VarKind::Continuous;
    double lb = 0.0;
    double ub = kInf;
};

struct Constraint {
    ConId id = -1;
    std::string name;
    LinExpr expr;  // constant folded into rhs on add
    Sense sense = Sense::Eq;
    double rhs = 0.0;
    std::string dual_tag;  // optional label for dual lookup
};

class StandardLp;

/// Mutable algebraic model: variables, linear constraints, minimization
/// objective. Construction is single-threaded; freeze() makes the model
/// immutable and safe to share across threads.
class Model {
public:
    VarId add_variable(const std::string& name, VarKind kind, double lb, double ub);
    VarId add_continuous(const std::string& name, double lb, double ub) {
        return add_variable(name, VarKind::Continuous, lb, ub);
    }
    VarId add_binary(const std::string& name) {
        return add_variable(name, VarKind::Binary, 0.0, 1.0);
    }

    ConId add_constraint(LinExpr expr, Sense sense, double rhs, const std::string& name,
                         const std::string& dual_tag = {});

    void set_objective(LinExpr expr);
    void add_objective_term(VarId v, double coef);
    void add_objective(const LinExpr& e, double scale = 1.0);

    /// Bound edits are allowed until freeze(); used for scenario fixings.
    void set_bounds(VarId v, double lb, double ub);
    void fix(VarId v, double value) { set_bounds(v, value, value); }

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    int num_variables() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(cons_.size()); }
    int num_binaries() const;

    const Variable& variable(VarId v) const { return vars_.at(v); }
    const Constraint& constraint(ConId c) const { return cons_.at(c); }
    const std::vector<Variable>& variables() const { return vars_; }
    const std::vector<Constraint>& constraints() const { return cons_; }
    const LinExpr& objective() const { return objective_; }

    VarId find_variable(const std::string& name) const;    // -1 if absent
    ConId find_constraint(const std::string& name) const;  // -1 if absent

    /// Equality-plus-bounds standard form V y = w. Rejects binaries.
    StandardLp standard_form() const;
    /// Same conversion with binaries relaxed to [0,1]; reports which
    /// columns must be integral. Used by branch and bound.
    StandardLp relax() const;

private:
    StandardLp to_standard(bool allow_binaries) const;
    void check_mutable() const;

    std::vector<Variable> vars_;
    std::vector<Constraint> cons_;
    LinExpr objective_;
    std::unordered_map<std::string, VarId> var_names_;
    std::unordered_map<std::string, ConId> con_names_;
    bool frozen_ = false;
};

/// Sparse column-major matrix. Dense extraction is provided for small
/// instances (tests, oracles); solver code consumes the sparse form.
struct SparseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> col_ptr;  // size cols+1
    std::vector<int> row_idx;
    std::vector<double> val;

    std::vector<std::vector<double>> dense() const;
    std::size_t nnz() const { return val.size(); }
};

/// Standard form `min c'y  s.t.  V y = w,  lb <= y <= ub`.
/// Every source inequality carries one nonnegative slack column so that the
/// original dual is read directly off the corresponding equality row.
class StandardLp {
public:
    std::vector<double> c;
    SparseMatrix V;
    std::vector<double> w;
    std::vector<double> lb;
    std::vector<double> ub;

    std::vector<VarId> col_to_var;    // -1 for slack columns
    std::vector<int> var_to_col;      // model var -> column
    std::vector<ConId> row_to_con;    // row -> model constraint
    std::vector<int> slack_of_row;    // column of the row's slack, -1 if none
    std::vector<int> integer_cols;    // columns that must be integral (relax() only)
    double objective_constant = 0.0;

    int num_rows() const { return V.rows; }
    int num_cols() const { return V.cols; }

    /// Dense view of V; intended for desk-scale models.
    std::vector<std::vector<double>> dense_v() const { return V.dense(); }
};

std::string format_number(double v);

}  // namespace nwa
