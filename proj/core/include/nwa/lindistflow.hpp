#pragma once

#include <functional>

#include "nwa/model.hpp"
#include "nwa/network.hpp"

namespace nwa {

/// Three-phase voltage sensitivity matrices of one line, in per-unit power
/// base (pu^2 per pu of real/reactive flow). Rows/cols of absent phases are
/// zero. For a single-phase line with z = r + jx these reduce to -2r / -2x.
struct SensitivityMatrices {
    std::array<std::array<double, 3>, 3> mp{};
    std::array<std::array<double, 3>, 3> mq{};
};

SensitivityMatrices sensitivity_matrices(const Line& line, double z_base_ohm);

/// Device injections added on top of (or replacing) the modeled bus load.
struct InjectionHook {
    /// Appends device terms (kW, injection positive) for (bus, phase, t).
    std::function<void(int bus, int ph, int t, LinExpr& into)> add_real_kw;
    /// Buses whose demand is served by the lower level; the bus load is
    /// dropped from the real-power balance (the investor's balance carries
    /// it) and the hook's net export term stands in for it.
    std::vector<char> load_replaced;
};

/// Variable handles created by build_lindistflow. Index helpers return -1
/// for absent phases.
struct FlowHandles {
    int steps = 0;
    int n_bus = 0, n_line = 0;
    std::vector<VarId> line_p, line_q;  // [line][ph][t]
    std::vector<VarId> volt;            // [bus][ph][t]
    std::vector<VarId> inj_p;           // [bus][ph][t], created for device/transformer buses
    std::vector<VarId> head_p, head_q;  // [ph][t], substation phases
    std::vector<ConId> p_balance_rows, q_balance_rows, voltage_rows;

    VarId lp(int line, int ph, int t) const { return line_p[(line * 3 + ph) * steps + t]; }
    VarId lq(int line, int ph, int t) const { return line_q[(line * 3 + ph) * steps + t]; }
    VarId v(int bus, int ph, int t) const { return volt[(bus * 3 + ph) * steps + t]; }
    VarId inj(int bus, int ph, int t) const { return inj_p[(bus * 3 + ph) * steps + t]; }
    VarId hp(int ph, int t) const { return head_p[ph * steps + t]; }
    VarId hq(int ph, int t) const { return head_q[ph * steps + t]; }
};

/// Generates the LinDistFlow constraint set over the horizon: real and
/// reactive balances per node-phase-step, voltage propagation per
/// line-phase-step, head definitions, and box bounds. The substation
/// voltage is fixed at 1.0 pu^2 on all phases.
FlowHandles build_lindistflow(Model& m, const CaseFile& c, int horizon, const InjectionHook& hook);

struct BalanceReport {
    double max_p_residual = 0.0;
    double max_q_residual = 0.0;
    double max_v_residual = 0.0;
    std::string worst_row;
    bool pass = false;
};

/// Residuals of the generated balance and voltage rows at a solved point.
BalanceReport validate_power_balance(const Model& m, const FlowHandles& h,
                                     const std::vector<double>& x, double tol);

}  // namespace nwa
