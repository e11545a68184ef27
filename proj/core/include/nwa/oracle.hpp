#pragma once

#include <vector>

#include "nwa/network.hpp"

namespace nwa {

struct BilevelOracleResult {
    std::vector<double> best_price;  // per (site, t), effective $/kWh
    double best_cost = 0.0;          // planner objective at the grid optimum
    long evaluations = 0;
    /// Worst-case objective error introduced by the grid spacing.
    double resolution_slack = 0.0;
};

/// Exhaustive grid search over price vectors in [0, price_cap]^(n_der * T):
/// for each grid point the lower-level LP is solved with the same simplex
/// as the main path and the planner cost is evaluated against that
/// response. Guarded at one million lower-level solves.
BilevelOracleResult bilevel_oracle(const CaseFile& c, int grid_points_per_dim);

/// Planner cost for a fixed price vector and the investor's best response:
/// upgrade/BESS-free evaluation used by the oracle (tiny cases carry no
/// BESS sites and forced upgrades).
double planner_cost_for_fixed_signal(const CaseFile& c, const std::vector<double>& price);

}  // namespace nwa
