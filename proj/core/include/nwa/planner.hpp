#pragma once

#include "nwa/lindistflow.hpp"
#include "nwa/model.hpp"
#include "nwa/network.hpp"

namespace nwa {

/// Present worth factor: sum over years of ((1+r_e)(1+r_c)/(1+discount))^y.
double pwf(double r_e, double r_c, double discount, int n_years);

struct BessHandles {
    int steps = 0;
    std::vector<int> site_bus;  // per site
    // per (site, phase-slot): -1 for absent phases
    std::vector<VarId> kw, kwh;            // [site*3+ph]
    std::vector<VarId> charge, discharge;  // [(site*3+ph)*T + t]
    std::vector<VarId> soc;                // [(site*3+ph)*(T+1) + t]
    LinExpr capex;

    VarId chg(int s, int ph, int t) const { return charge[(s * 3 + ph) * steps + t]; }
    VarId dis(int s, int ph, int t) const { return discharge[(s * 3 + ph) * steps + t]; }
    VarId state(int s, int ph, int t) const { return soc[(s * 3 + ph) * (steps + 1) + t]; }
};

/// Battery investment and dispatch block: SOC recursion with charge and
/// discharge efficiency, inverter and energy sizing couplings, half-full
/// initial and terminal state.
BessHandles build_bess(Model& m, const CaseFile& c, int horizon);

struct UpgradeHandles {
    std::vector<VarId> z_trfx;
    std::vector<int> trfx_bus;
    std::vector<VarId> z_line;
    std::vector<int> line_index;
    LinExpr capex;
};

/// Binary upgrade decisions with switched flow limits +-(R + z*dR) on rated
/// transformers (bus injections) and upgrade-optioned lines (line flows).
UpgradeHandles build_upgrades(Model& m, const CaseFile& c, const FlowHandles& flows, int horizon);

struct HeadCostHandles {
    std::vector<VarId> head_pos;  // [ph*T + t], substation phases only
    std::vector<VarId> peak;      // per demand period
    LinExpr energy_cost;
    LinExpr demand_cost;
};

/// Non-negative feeder-head power, discounted bulk energy cost, and peak
/// demand charges with per-period linking rows.
HeadCostHandles build_head_costs(Model& m, const CaseFile& c, const FlowHandles& flows,
                                 int horizon);

struct PlannerObjectiveParts {
    const BessHandles* bess = nullptr;
    const UpgradeHandles* upgrades = nullptr;
    const HeadCostHandles* head = nullptr;
    const LinExpr* der_payment = nullptr;  // linearized payment, may be null
    double payment_scale = 0.0;            // a/b
};

/// Single minimization objective: BESS capex + upgrade capex + energy +
/// demand charges + scaled DER payment. Throws when a required part is
/// missing.
void assemble_planner_objective(Model& m, const PlannerObjectiveParts& parts);

}  // namespace nwa
