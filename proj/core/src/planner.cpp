#include "nwa/planner.hpp"

#include <cmath>
#include <stdexcept>

namespace nwa {

namespace {

std::string tkey(int t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", t);
    return buf;
}

}  // namespace

double pwf(double r_e, double r_c, double discount, int n_years) {
    if (discount <= -1.0) throw std::invalid_argument("pwf: discount must exceed -1");
    if (n_years < 1) throw std::invalid_argument("pwf: need at least one year");
    const double ratio = (1.0 + r_e) * (1.0 + r_c) / (1.0 + discount);
    double acc = 0.0, term = 1.0;
    for (int y = 1; y <= n_years; ++y) {
        term *= ratio;
        acc += term;
    }
    return acc;
}

BessHandles build_bess(Model& m, const CaseFile& c, int horizon) {
    if (c.bess_sites.empty()) throw std::invalid_argument("build_bess: no candidate sites");
    const int T = horizon;
    const double eta = c.econ.planner.bess_efficiency;
    const double dt = c.series.step_hours;

    BessHandles h;
    h.steps = T;
    const int ns = static_cast<int>(c.bess_sites.size());
    h.kw.assign(ns * 3, -1);
    h.kwh.assign(ns * 3, -1);
    h.charge.assign(static_cast<std::size_t>(ns) * 3 * T, -1);
    h.discharge.assign(static_cast<std::size_t>(ns) * 3 * T, -1);
    h.soc.assign(static_cast<std::size_t>(ns) * 3 * (T + 1), -1);

    for (int s = 0; s < ns; ++s) {
        const BessSite& site = c.bess_sites[s];
        const Bus& bus = c.feeder.buses[site.bus];
        h.site_bus.push_back(site.bus);
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(bus.phases, ph)) continue;
            const std::string key = bus.id + "_" + phase_name(ph);
            VarId kw = m.add_continuous("bkw_" + key, 0.0, site.max_kw_per_phase);
            VarId kwh = m.add_continuous("bkwh_" + key, 0.0, site.max_kwh_per_phase);
            h.kw[s * 3 + ph] = kw;
            h.kwh[s * 3 + ph] = kwh;
            h.capex.add(kw, c.econ.planner.bess_kw_cost);
            h.capex.add(kwh, c.econ.planner.bess_kwh_cost);
            for (int t = 0; t <= T; ++t) {
                h.soc[(s * 3 + ph) * (T + 1) + t] =
                    m.add_continuous("soc_" + key + "_" + tkey(t), 0.0, site.max_kwh_per_phase);
            }
            for (int t = 0; t < T; ++t) {
                h.charge[(s * 3 + ph) * T + t] =
                    m.add_continuous("bchg_" + key + "_" + tkey(t), 0.0, site.max_kw_per_phase);
                h.discharge[(s * 3 + ph) * T + t] =
                    m.add_continuous("bdis_" + key + "_" + tkey(t), 0.0, site.max_kw_per_phase);
            }
            {
                LinExpr e;
                e.add(h.state(s, ph, 0), 1.0).add(kwh, -0.5);
                m.add_constraint(std::move(e), Sense::Eq, 0.0, "soc0_" + key);
            }
            for (int t = 0; t < T; ++t) {
                LinExpr e;
                e.add(h.state(s, ph, t + 1), 1.0).add(h.state(s, ph, t), -1.0);
                e.add(h.chg(s, ph, t), -eta * dt).add(h.dis(s, ph, t), dt / eta);
                m.add_constraint(std::move(e), Sense::Eq, 0.0, "socrec_" + key + "_" + tkey(t));
                LinExpr p;
                p.add(h.chg(s, ph, t), 1.0).add(h.dis(s, ph, t), 1.0).add(kw, -1.0);
                m.add_constraint(std::move(p), Sense::Le, 0.0, "bpow_" + key + "_" + tkey(t));
                LinExpr cap;
                cap.add(h.state(s, ph, t + 1), 1.0).add(kwh, -1.0);
                m.add_constraint(std::move(cap), Sense::Le, 0.0, "bcap_" + key + "_" + tkey(t));
            }
            {
                LinExpr e;
                e.add(h.state(s, ph, T), 1.0).add(kwh, -0.5);
                m.add_constraint(std::move(e), Sense::Eq, 0.0, "socT_" + key);
            }
        }
    }
    return h;
}

UpgradeHandles build_upgrades(Model& m, const CaseFile& c, const FlowHandles& flows, int horizon) {
    UpgradeHandles h;
    const int T = horizon;
    for (const Bus& b : c.feeder.buses) {
        if (!b.transformer) continue;
        VarId z = m.add_binary("z_trfx_" + b.id);
        h.z_trfx.push_back(z);
        h.trfx_bus.push_back(b.index);
        h.capex.add(z, b.transformer->cost_usd);
        const double r = b.transformer->rating_kw_per_phase;
        const double dr = b.transformer->upgrade_kw_per_phase;
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(b.phases, ph)) continue;
            for (int t = 0; t < T; ++t) {
                VarId inj = flows.inj(b.index, ph, t);
                if (inj < 0)
                    throw std::invalid_argument("build_upgrades: missing injection variable at " +
                                                b.id);
                LinExpr up;
                up.add(inj, 1.0).add(z, -dr);
                m.add_constraint(std::move(up), Sense::Le, r,
                                 "trul_" + b.id + "_" + phase_name(ph) + "_" + tkey(t));
                LinExpr lo;
                lo.add(inj, -1.0).add(z, -dr);
                m.add_constraint(std::move(lo), Sense::Le, r,
                                 "trll_" + b.id + "_" + phase_name(ph) + "_" + tkey(t));
            }
        }
    }
    for (const Line& l : c.feeder.lines) {
        if (!l.upgrade) continue;
        VarId z = m.add_binary("z_line_" + l.name);
        h.z_line.push_back(z);
        h.line_index.push_back(l.index);
        h.capex.add(z, l.upgrade->cost_usd);
        const double r = l.rating_kw_per_phase;
        const double dr = l.upgrade->delta_kw_per_phase;
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(l.phases, ph)) continue;
            for (int t = 0; t < T; ++t) {
                LinExpr up;
                up.add(flows.lp(l.index, ph, t), 1.0).add(z, -dr);
                m.add_constraint(std::move(up), Sense::Le, r,
                                 "lnul_" + l.name + "_" + phase_name(ph) + "_" + tkey(t));
                LinExpr lo;
                lo.add(flows.lp(l.index, ph, t), -1.0).add(z, -dr);
                m.add_constraint(std::move(lo), Sense::Le, r,
                                 "lnll_" + l.name + "_" + phase_name(ph) + "_" + tkey(t));
            }
        }
    }
    return h;
}

HeadCostHandles build_head_costs(Model& m, const CaseFile& c, const FlowHandles& flows,
                                 int horizon) {
    HeadCostHandles h;
    const int T = horizon;
    const Bus& sub = c.feeder.buses[c.feeder.substation];
    const double a = pwf(c.econ.planner.r_e, c.econ.planner.r_c, c.econ.planner.r_wacc,
                         c.econ.planner.n_years);
    const double dt = c.series.step_hours;

    h.head_pos.assign(static_cast<std::size_t>(3) * T, -1);
    for (int ph = 0; ph < 3; ++ph) {
        if (!has_phase(sub.phases, ph)) continue;
        for (int t = 0; t < T; ++t) {
            VarId p = m.add_continuous("P0pos_" + std::string(phase_name(ph)) + "_" + tkey(t), 0.0,
                                       kInf);
            h.head_pos[ph * T + t] = p;
            LinExpr e;
            e.add(p, 1.0).add(flows.hp(ph, t), -1.0);
            m.add_constraint(std::move(e), Sense::Ge, 0.0,
                             "headpos_" + std::string(phase_name(ph)) + "_" + tkey(t));
            h.energy_cost.add(p, a * c.series.lmp[t] * dt);
        }
    }

    int n_periods = 0;
    for (int t = 0; t < T; ++t) n_periods = std::max(n_periods, c.series.period_of_step[t] + 1);
    h.peak.resize(n_periods);
    for (int s = 0; s < n_periods; ++s) {
        h.peak[s] = m.add_continuous("pmax_" + std::to_string(s), 0.0, kInf);
        h.demand_cost.add(h.peak[s], a * c.series.demand_price[s]);
    }
    for (int t = 0; t < T; ++t) {
        LinExpr e;
        for (int ph = 0; ph < 3; ++ph)
            if (has_phase(sub.phases, ph)) e.add(flows.hp(ph, t), 1.0);
        e.add(h.peak[c.series.period_of_step[t]], -1.0);
        m.add_constraint(std::move(e), Sense::Le, 0.0, "dem_" + tkey(t));
    }
    return h;
}

void assemble_planner_objective(Model& m, const PlannerObjectiveParts& parts) {
    if (!parts.bess || !parts.upgrades || !parts.head)
        throw std::invalid_argument("assemble_planner_objective: missing part");
    LinExpr obj;
    obj.add(parts.bess->capex);
    obj.add(parts.upgrades->capex);
    obj.add(parts.head->energy_cost);
    obj.add(parts.head->demand_cost);
    if (parts.der_payment) obj.add(*parts.der_payment, parts.payment_scale);
    m.set_objective(std::move(obj));
}

}  // namespace nwa
