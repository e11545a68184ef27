#pragma once

#include <functional>
#include <vector>

#include "nwa/simplex.hpp"

namespace nwa {

enum class MipStatus { Optimal, Infeasible, Unbounded, LimitHit };

struct BnbConfig {
    double gap_target = 0.02;  // relative
    long node_limit = 200000;
    double time_limit_s = 0.0;  // 0 = unlimited
    double int_tol = 1e-6;
    SimplexOptions lp;
    /// Candidate solutions over the structural columns (slacks may be
    /// omitted; they are reconstructed from the rows). Feasible candidates
    /// seed the incumbent without an LP solve.
    std::vector<std::vector<double>> initial_solutions;
    /// Iteration budget for heuristic probe LPs (0 = unlimited).
    long probe_iter_limit = 0;
    /// Run the rounding heuristic every k nodes (root always).
    long probe_every = 100;
};

struct MipResult {
    MipStatus status = MipStatus::LimitHit;
    std::vector<double> x;
    std::vector<double> duals;          // LP duals at the incumbent's fixing
    std::vector<double> reduced_costs;  // same
    double objective = 0.0;
    double best_bound = -kInf;
    double gap = kInf;  // relative, proven
    long nodes = 0;
    long lp_iterations = 0;
    bool limits_hit() const { return status == MipStatus::LimitHit; }
};

/// Optional incumbent heuristic: given a fractional relaxation point,
/// propose one or more integral assignments for the integer columns (same
/// order as lp.integer_cols). Each proposal is probed with an LP solve.
using RoundingHint = std::function<void(const std::vector<double>& x,
                                        std::vector<std::vector<double>>& proposals)>;

/// Best-bound branch and bound over the binaries of a relaxed model.
/// Branching variable: most fractional, ties broken by lowest column id.
/// Deterministic node order: priority (bound, node id).
MipResult branch_and_bound(const StandardLp& relaxed, const BnbConfig& cfg = {},
                           const RoundingHint& hint = nullptr);

}  // namespace nwa
