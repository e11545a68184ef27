#pragma once

#include <cstdint>
#include <vector>

#include "nwa/model.hpp"

namespace nwa {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

enum VStat : std::int8_t { kAtLower = 0, kAtUpper = 1, kFreeZero = 2, kBasic = 3 };

struct SimplexOptions {
    double feas_tol = 1e-8;
    double opt_tol = 1e-9;
    double pivot_tol = 1e-9;
    int refactor_every = 50;
    long max_iter = 2'000'000;
    int stall_limit = 500;  // iterations without progress before Bland's rule
    /// Optional starting basis: vstat for all structural columns plus one
    /// artificial per row (size n + m). Falls back to a cold start when the
    /// hinted basis is unusable.
    const std::vector<std::int8_t>* start = nullptr;
};

struct SimplexResult {
    LpStatus status = LpStatus::IterLimit;
    std::vector<double> x;              // structural column values
    std::vector<double> duals;          // one per equality row
    std::vector<double> reduced_costs;  // structural columns
    double objective = 0.0;
    long iterations = 0;
    std::vector<std::int8_t> vstat;  // n + m, reusable as a start hint
    /// |c'x - (w'duals + bound contributions)| / (1 + |c'x|), filled at optimum.
    double duality_gap_rel = 0.0;
};

/// Bounded-variable primal simplex over the equality standard form.
/// Phase 1 minimizes total bound infeasibility of the basics; phase 2
/// optimizes the true objective. Deterministic: identical inputs produce
/// identical pivot sequences.
SimplexResult simplex(const StandardLp& lp, const SimplexOptions& opt = {});

}  // namespace nwa
