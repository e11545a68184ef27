#include "nwa/lindistflow.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace nwa {

namespace {

std::string tkey(int t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", t);
    return buf;
}

}  // namespace

SensitivityMatrices sensitivity_matrices(const Line& line, double z_base_ohm) {
    if (!(z_base_ohm > 0.0)) throw std::invalid_argument("zero base impedance");
    SensitivityMatrices s;
    const std::complex<double> alpha[3] = {
        {1.0, 0.0},
        std::polar(1.0, -2.0 * 3.14159265358979323846 / 3.0),
        std::polar(1.0, +2.0 * 3.14159265358979323846 / 3.0),
    };
    for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) {
            if (!has_phase(line.phases, p) || !has_phase(line.phases, q)) continue;
            std::complex<double> z_pu = line.z_ohm[p][q] / z_base_ohm;
            if (!std::isfinite(z_pu.real()) || !std::isfinite(z_pu.imag()))
                throw std::invalid_argument("non-finite impedance on line " + line.name);
            std::complex<double> gamma = alpha[p] * std::conj(alpha[q]);
            std::complex<double> prod = gamma * std::conj(z_pu);
            s.mp[p][q] = -2.0 * prod.real();
            s.mq[p][q] = 2.0 * prod.imag();
        }
    }
    return s;
}

FlowHandles build_lindistflow(Model& m, const CaseFile& c, int horizon, const InjectionHook& hook) {
    const Feeder& f = c.feeder;
    const int T = horizon;
    if (T < 1 || T > c.series.steps) throw std::invalid_argument("bad horizon");

    FlowHandles h;
    h.steps = T;
    h.n_bus = static_cast<int>(f.buses.size());
    h.n_line = static_cast<int>(f.lines.size());
    h.line_p.assign(static_cast<std::size_t>(h.n_line) * 3 * T, -1);
    h.line_q.assign(static_cast<std::size_t>(h.n_line) * 3 * T, -1);
    h.volt.assign(static_cast<std::size_t>(h.n_bus) * 3 * T, -1);
    h.inj_p.assign(static_cast<std::size_t>(h.n_bus) * 3 * T, -1);
    h.head_p.assign(static_cast<std::size_t>(3) * T, -1);
    h.head_q.assign(static_cast<std::size_t>(3) * T, -1);

    const double tan_phi =
        c.series.load_power_factor >= 1.0
            ? 0.0
            : std::tan(std::acos(c.series.load_power_factor));

    // Line flow variables, bounded by rating (+ upgrade headroom when the
    // rating is expandable; the switched limit rows come from the planner).
    for (const Line& l : f.lines) {
        double span = l.rating_kw_per_phase + (l.upgrade ? l.upgrade->delta_kw_per_phase : 0.0);
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(l.phases, ph)) continue;
            for (int t = 0; t < T; ++t) {
                h.line_p[(l.index * 3 + ph) * T + t] =
                    m.add_continuous("P_" + l.name + "_" + phase_name(ph) + "_" + tkey(t), -span,
                                     span);
                h.line_q[(l.index * 3 + ph) * T + t] =
                    m.add_continuous("Q_" + l.name + "_" + phase_name(ph) + "_" + tkey(t), -span,
                                     span);
            }
        }
    }
    // Voltage-squared variables; substation pinned to 1 pu^2.
    for (const Bus& b : f.buses) {
        bool is_sub = b.index == f.substation;
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(b.phases, ph)) continue;
            for (int t = 0; t < T; ++t) {
                double lo = is_sub ? 1.0 : f.vmin_pu2;
                double hi = is_sub ? 1.0 : f.vmax_pu2;
                h.volt[(b.index * 3 + ph) * T + t] =
                    m.add_continuous("v_" + b.id + "_" + phase_name(ph) + "_" + tkey(t), lo, hi);
            }
        }
    }

    // Net-injection variables where a device or a rated transformer needs an
    // addressable P_{j,phi,t}; elsewhere the constant load folds into the rhs.
    auto needs_inj = [&](const Bus& b, int ph, int t) {
        if (b.index == f.substation) return false;
        if (b.transformer) return true;
        if (!hook.add_real_kw) return false;
        LinExpr probe;
        hook.add_real_kw(b.index, ph, t, probe);
        return !probe.empty() || probe.constant() != 0.0;
    };
    for (const Bus& b : f.buses) {
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(b.phases, ph)) continue;
            if (!needs_inj(b, ph, 0)) continue;
            double span = 4.0 * (b.transformer ? (b.transformer->rating_kw_per_phase +
                                                  b.transformer->upgrade_kw_per_phase)
                                               : 0.0);
            // Generous box; device bounds and switched rating rows bind first.
            double peak = c.peak_bus_demand(b.index);
            span = std::max({span, 4.0 * peak, 100.0});
            for (int t = 0; t < T; ++t) {
                VarId inj = m.add_continuous(
                    "Pinj_" + b.id + "_" + phase_name(ph) + "_" + tkey(t), -span, span);
                h.inj_p[(b.index * 3 + ph) * T + t] = inj;
                // Definition: inj - devices = -load (or 0 when replaced).
                LinExpr def;
                def.add(inj, 1.0);
                if (hook.add_real_kw) {
                    LinExpr dev;
                    hook.add_real_kw(b.index, ph, t, dev);
                    def.add(dev, -1.0);
                }
                bool replaced = !hook.load_replaced.empty() && hook.load_replaced[b.index];
                double load = replaced ? 0.0 : c.series.load(b.index, ph, t);
                m.add_constraint(std::move(def), Sense::Eq, -load,
                                 "pinj_" + b.id + "_" + phase_name(ph) + "_" + tkey(t));
            }
        }
    }

    // Head variables and definitions (one per substation phase and step).
    const Bus& sub = f.buses[f.substation];
    auto kids = f.children_lines();
    for (int ph = 0; ph < 3; ++ph) {
        if (!has_phase(sub.phases, ph)) continue;
        double span = 0.0;
        for (int li : kids[f.substation]) {
            const Line& l = f.lines[li];
            if (has_phase(l.phases, ph))
                span += l.rating_kw_per_phase + (l.upgrade ? l.upgrade->delta_kw_per_phase : 0.0);
        }
        for (int t = 0; t < T; ++t) {
            VarId hp = m.add_continuous("P0_" + std::string(phase_name(ph)) + "_" + tkey(t), -span,
                                        span);
            VarId hq = m.add_continuous("Q0_" + std::string(phase_name(ph)) + "_" + tkey(t), -span,
                                        span);
            h.head_p[ph * T + t] = hp;
            h.head_q[ph * T + t] = hq;
            LinExpr ep, eq;
            ep.add(hp, 1.0);
            eq.add(hq, 1.0);
            for (int li : kids[f.substation]) {
                const Line& l = f.lines[li];
                if (!has_phase(l.phases, ph)) continue;
                ep.add(h.lp(l.index, ph, t), -1.0);
                eq.add(h.lq(l.index, ph, t), -1.0);
            }
            m.add_constraint(std::move(ep), Sense::Eq, 0.0,
                             "phead_" + std::string(phase_name(ph)) + "_" + tkey(t));
            m.add_constraint(std::move(eq), Sense::Eq, 0.0,
                             "qhead_" + std::string(phase_name(ph)) + "_" + tkey(t));
        }
    }

    // Orientation: parent line of each non-substation bus.
    std::vector<int> parent_line(f.buses.size(), -1);
    for (std::size_t b = 0; b < f.buses.size(); ++b)
        for (int li : kids[b]) {
            const Line& l = f.lines[li];
            int child = (l.from == static_cast<int>(b)) ? l.to : l.from;
            parent_line[child] = li;
        }

    // Balances and voltage propagation.
    for (const Bus& b : f.buses) {
        if (b.index == f.substation) continue;
        int pl = parent_line[b.index];
        if (pl < 0) throw std::invalid_argument("bus not connected: " + b.id);
        bool replaced = !hook.load_replaced.empty() && hook.load_replaced[b.index];
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(b.phases, ph)) continue;
            for (int t = 0; t < T; ++t) {
                // P_{ij} + P_j - sum_k P_{jk} = 0, load folded right when
                // no injection variable exists.
                LinExpr ep, eq;
                ep.add(h.lp(pl, ph, t), 1.0);
                eq.add(h.lq(pl, ph, t), 1.0);
                for (int li : kids[b.index]) {
                    const Line& l = f.lines[li];
                    if (!has_phase(l.phases, ph)) continue;
                    ep.add(h.lp(l.index, ph, t), -1.0);
                    eq.add(h.lq(l.index, ph, t), -1.0);
                }
                double pload = replaced ? 0.0 : c.series.load(b.index, ph, t);
                double qload = c.series.load(b.index, ph, t) * tan_phi;
                VarId inj = h.inj(b.index, ph, t);
                if (inj >= 0) {
                    ep.add(inj, 1.0);
                    m.add_constraint(std::move(ep), Sense::Eq, 0.0,
                                     "pbal_" + b.id + "_" + phase_name(ph) + "_" + tkey(t));
                } else {
                    m.add_constraint(std::move(ep), Sense::Eq, pload,
                                     "pbal_" + b.id + "_" + phase_name(ph) + "_" + tkey(t));
                }
                h.p_balance_rows.push_back(m.num_constraints() - 1);
                // Reactive: loads only (devices are unity power factor).
                m.add_constraint(std::move(eq), Sense::Eq, qload,
                                 "qbal_" + b.id + "_" + phase_name(ph) + "_" + tkey(t));
                h.q_balance_rows.push_back(m.num_constraints() - 1);
            }
        }
    }

    const double s_base = f.base_kva;
    for (const Line& l : f.lines) {
        SensitivityMatrices sm = sensitivity_matrices(l, f.z_base_ohm());
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(l.phases, ph)) continue;
            // Both endpoints carry the line's phases (validated at load).
            for (int t = 0; t < T; ++t) {
                LinExpr e;
                e.add(h.v(l.to, ph, t), 1.0);
                e.add(h.v(l.from, ph, t), -1.0);
                for (int ps = 0; ps < 3; ++ps) {
                    if (!has_phase(l.phases, ps)) continue;
                    if (sm.mp[ph][ps] != 0.0) e.add(h.lp(l.index, ps, t), -sm.mp[ph][ps] / s_base);
                    if (sm.mq[ph][ps] != 0.0) e.add(h.lq(l.index, ps, t), -sm.mq[ph][ps] / s_base);
                }
                m.add_constraint(std::move(e), Sense::Eq, 0.0,
                                 "vlt_" + l.name + "_" + phase_name(ph) + "_" + tkey(t));
                h.voltage_rows.push_back(m.num_constraints() - 1);
            }
        }
    }
    return h;
}

BalanceReport validate_power_balance(const Model& m, const FlowHandles& h,
                                     const std::vector<double>& x, double tol) {
    if (static_cast<int>(x.size()) < m.num_variables())
        throw std::invalid_argument("solution does not cover all flow variables");
    BalanceReport rep;
    auto scan = [&](const std::vector<ConId>& rows, double& worst) {
        for (ConId id : rows) {
            const Constraint& con = m.constraint(id);
            double r = std::abs(con.expr.evaluate(x) - con.rhs);
            if (r > worst) {
                worst = r;
                if (r > std::max(rep.max_p_residual,
                                 std::max(rep.max_q_residual, rep.max_v_residual)))
                    rep.worst_row = con.name;
            }
        }
    };
    scan(h.p_balance_rows, rep.max_p_residual);
    scan(h.q_balance_rows, rep.max_q_residual);
    scan(h.voltage_rows, rep.max_v_residual);
    rep.pass = rep.max_p_residual <= tol && rep.max_q_residual <= tol && rep.max_v_residual <= tol;
    return rep;
}

}  // namespace nwa
