#include "nwa/bilevel.hpp"

#include <cmath>
#include <stdexcept>

namespace nwa {

KktHandles kkt_reformulate(Model& m, const LowerLevelForm& llf, const KktConfig& cfg) {
    if (cfg.bigm_scale <= 0.0) throw std::invalid_argument("kkt: nonpositive big-M scale");
    const int ncol = static_cast<int>(llf.cols.size());
    const int nrow = static_cast<int>(llf.rows.size());
    const int T = llf.steps;
    for (int k = 0; k < ncol; ++k)
        if (!std::isfinite(llf.lb[k]) || !std::isfinite(llf.ub[k]))
            throw std::invalid_argument("kkt: infinite bound on " + llf.cols[k].name);

    KktHandles h;
    h.y.resize(ncol);
    h.lam.resize(nrow);
    h.mu_lb.resize(ncol);
    h.mu_ub.resize(ncol);
    h.u_lb.assign(ncol, -1);
    h.u_ub.assign(ncol, -1);
    h.u_impexp.assign(llf.n_price(), -1);
    h.price.resize(llf.n_price());
    h.m_dual_lb.assign(ncol, 0.0);
    h.m_dual_ub.assign(ncol, 0.0);

    // Dual scale anchors: the discounted import price bounds every balance
    // dual, the discounted price cap bounds the signal's contribution. A
    // 1.25 headroom keeps legitimately attained duals clear of the caps so
    // that a dual at its cap really means the box truncated something.
    double p_imp = 0.0;
    for (int k = 0; k < ncol; ++k)
        if (llf.cols[k].role == LowerLevelForm::Role::Import)
            p_imp = std::max(p_imp, llf.c[k]);
    const double p_sig = llf.pwf_ll * cfg.price_cap;
    const double s = 1.25 * cfg.bigm_scale;

    // Price signal decisions.
    for (int site = 0; site < llf.n_sites(); ++site)
        for (int t = 0; t < T; ++t)
            h.price[site * T + t] = m.add_continuous(
                "xlam_" + std::to_string(site) + "_" + std::to_string(t), 0.0, cfg.price_cap);

    // Duals. Boxes are valid at an optimal KKT point (arguments in the
    // project notes); the caps double as the dual-side big-M.
    for (int r = 0; r < nrow; ++r) {
        const auto& row = llf.rows[r];
        double lo, hi;
        if (row.is_balance) {
            lo = 0.0;
            hi = s * p_imp;
        } else {
            lo = -s * (p_imp + p_sig);
            hi = 0.0;
        }
        h.lam[r] = m.add_continuous("lam_" + row.name, lo, hi);
    }
    for (int k = 0; k < ncol; ++k) {
        double cap;
        switch (llf.cols[k].role) {
            case LowerLevelForm::Role::Import: cap = p_imp; break;
            case LowerLevelForm::Role::Export: cap = p_imp + p_sig; break;
            case LowerLevelForm::Role::Production: cap = 2.0 * (p_imp + p_sig); break;
            case LowerLevelForm::Role::ProdSlack: cap = p_imp + p_sig; break;
            case LowerLevelForm::Role::Capacity:
            default: {
                // Stationarity scale of the capacity column: |c| plus the
                // production-row duals it touches.
                double acc = std::abs(llf.c[k]);
                for (int p = llf.V.col_ptr[k]; p < llf.V.col_ptr[k + 1]; ++p)
                    acc += std::abs(llf.V.val[p]) * (p_imp + p_sig);
                cap = acc;
            } break;
        }
        cap *= s;
        h.m_dual_lb[k] = cap;
        h.m_dual_ub[k] = cap;
        h.mu_lb[k] = m.add_continuous("mul_" + llf.cols[k].name, 0.0, cap);
        h.mu_ub[k] = m.add_continuous("muu_" + llf.cols[k].name, 0.0, cap);
    }

    // Primal copies of the lower-level columns.
    for (int k = 0; k < ncol; ++k)
        h.y[k] = m.add_continuous(llf.cols[k].name, llf.lb[k], llf.ub[k]);

    // Primal feasibility V y = w.
    std::vector<LinExpr> rows(nrow);
    for (int k = 0; k < ncol; ++k)
        for (int p = llf.V.col_ptr[k]; p < llf.V.col_ptr[k + 1]; ++p)
            rows[llf.V.row_idx[p]].add(h.y[k], llf.V.val[p]);
    for (int r = 0; r < nrow; ++r)
        m.add_constraint(std::move(rows[r]), Sense::Eq, llf.w[r], llf.rows[r].name,
                         llf.rows[r].name);

    // Stationarity per column: c_k + (Bx)_k - (V'lam)_k + mu_ub_k - mu_lb_k = 0.
    for (int k = 0; k < ncol; ++k) {
        LinExpr e;
        int pm = llf.price_of_col[k];
        if (pm >= 0) e.add(h.price[pm], llf.coupling_value);
        for (int p = llf.V.col_ptr[k]; p < llf.V.col_ptr[k + 1]; ++p)
            e.add(h.lam[llf.V.row_idx[p]], -llf.V.val[p]);
        e.add(h.mu_ub[k], 1.0);
        e.add(h.mu_lb[k], -1.0);
        m.add_constraint(std::move(e), Sense::Eq, -llf.c[k], "stat_" + llf.cols[k].name);
    }

    // Complementarity via big-M binaries; columns with equal bounds have
    // both complementarities vacuous.
    for (int k = 0; k < ncol; ++k) {
        double range = llf.ub[k] - llf.lb[k];
        if (range <= 0.0) continue;
        VarId ul = m.add_binary("ulb_" + llf.cols[k].name);
        VarId uu = m.add_binary("uub_" + llf.cols[k].name);
        h.u_lb[k] = ul;
        h.u_ub[k] = uu;
        {
            LinExpr e;
            e.add(h.mu_lb[k], 1.0).add(ul, -h.m_dual_lb[k]);
            m.add_constraint(std::move(e), Sense::Le, 0.0, "cml_" + llf.cols[k].name);
        }
        {
            LinExpr e;  // y - lb <= range (1 - u)  =>  y + range u <= ub
            e.add(h.y[k], 1.0).add(ul, range);
            m.add_constraint(std::move(e), Sense::Le, llf.ub[k], "cpl_" + llf.cols[k].name);
        }
        {
            LinExpr e;
            e.add(h.mu_ub[k], 1.0).add(uu, -h.m_dual_ub[k]);
            m.add_constraint(std::move(e), Sense::Le, 0.0, "cmu_" + llf.cols[k].name);
        }
        {
            LinExpr e;  // ub - y <= range (1 - u)  =>  -y + range u <= -lb
            e.add(h.y[k], -1.0).add(uu, range);
            m.add_constraint(std::move(e), Sense::Le, -llf.lb[k], "cpu_" + llf.cols[k].name);
        }
    }

    // Import/export exclusion per (site, t); trivial when either side is
    // fixed at zero (for example outside production hours).
    for (int site = 0; site < llf.n_sites(); ++site) {
        for (int t = 0; t < T; ++t) {
            int ki = llf.import_col[site * T + t];
            int ke = llf.export_col[site * T + t];
            double d = llf.w[llf.balance_row(site, t)];
            double m_imp = std::min(llf.ub[ki], std::max(0.0, d));
            double m_exp = llf.ub[ke];
            if (m_imp <= 0.0 || m_exp <= 0.0) continue;
            VarId u = m.add_binary("uie_" + std::to_string(site) + "_" + std::to_string(t));
            h.u_impexp[site * T + t] = u;
            {
                LinExpr e;
                e.add(h.y[ki], 1.0).add(u, -m_imp);
                m.add_constraint(std::move(e), Sense::Le, 0.0,
                                 "cie_i_" + std::to_string(site) + "_" + std::to_string(t));
            }
            {
                LinExpr e;
                e.add(h.y[ke], 1.0).add(u, m_exp);
                m.add_constraint(std::move(e), Sense::Le, m_exp,
                                 "cie_e_" + std::to_string(site) + "_" + std::to_string(t));
            }
        }
    }

    // Investor-optimality bound against the zero-signal reference response:
    // c'y - sum(lam y_exp) <= c'y0 - b sum(x y0_exp). Tightens the payment
    // term without cutting any bilevel-feasible point.
    if (!cfg.reference_y.empty()) {
        if (cfg.reference_y.size() != static_cast<std::size_t>(ncol))
            throw std::invalid_argument("kkt: reference solution size mismatch");
        LinExpr e;
        for (int k = 0; k < ncol; ++k) e.add(h.y[k], llf.c[k]);
        LinExpr pay = linearized_payment(llf, h);
        e.add(pay, -1.0);
        double rhs = cfg.reference_objective;
        for (int site = 0; site < llf.n_sites(); ++site)
            for (int t = 0; t < T; ++t) {
                double y0 = cfg.reference_y[llf.export_col[site * T + t]];
                if (y0 != 0.0) e.add(h.price[site * T + t], -llf.coupling_value * y0);
            }
        m.add_constraint(std::move(e), Sense::Le, rhs, "investor_bound");
        h.investor_bound_row = m.num_constraints() - 1;
    }
    return h;
}

LinExpr linearized_payment(const LowerLevelForm& llf, const KktHandles& h) {
    const int ncol = static_cast<int>(llf.cols.size());
    const int nrow = static_cast<int>(llf.rows.size());
    if (llf.v_yexp == 0.0) throw std::invalid_argument("payment: zero export coefficient");
    // All export columns must carry the same balance-row coefficient.
    for (int p = 0; p < llf.n_price(); ++p) {
        int k = llf.export_col[p];
        if (k < 0) continue;
        for (int q = llf.V.col_ptr[k]; q < llf.V.col_ptr[k + 1]; ++q) {
            int r = llf.V.row_idx[q];
            if (llf.rows[r].is_balance && std::abs(llf.V.val[q] - llf.v_yexp) > 1e-12)
                throw std::invalid_argument("payment: heterogeneous export coefficients");
        }
    }
    LinExpr e;
    const double inv = 1.0 / llf.v_yexp;
    for (int r = 0; r < nrow; ++r)
        if (llf.w[r] != 0.0) e.add(h.lam[r], inv * llf.w[r]);
    for (int k = 0; k < ncol; ++k) {
        if (llf.c[k] != 0.0) e.add(h.y[k], -inv * llf.c[k]);
        if (llf.ub[k] != 0.0) e.add(h.mu_ub[k], -inv * llf.ub[k]);
        if (llf.lb[k] != 0.0) e.add(h.mu_lb[k], inv * llf.lb[k]);
    }
    e.normalize();
    return e;
}

PriceSignal recover_price_signal(const LowerLevelForm& llf, const KktHandles& h,
                                 const std::vector<double>& x, double tol) {
    PriceSignal out;
    out.steps = llf.steps;
    out.value.resize(llf.n_price());
    for (int p = 0; p < llf.n_price(); ++p) out.value[p] = x.at(h.price[p]);
    for (int site = 0; site < llf.n_sites(); ++site) {
        for (int t = 0; t < llf.steps; ++t) {
            int p = site * llf.steps + t;
            int k = llf.export_col[p];
            double y = x.at(h.y[k]);
            if (y <= llf.lb[k] + 1e-7 || y >= llf.ub[k] - 1e-7) {
                if (y >= llf.ub[k] - 1e-7)
                    out.flags.push_back({site, t, "bound-binding, skipped"});
                continue;
            }
            double lam = x.at(h.lam[llf.balance_row(site, t)]);
            double rec = lam / llf.pwf_ll;
            double mism = std::abs(lam - llf.pwf_ll * out.value[p]) / (1.0 + std::abs(lam));
            out.max_mismatch = std::max(out.max_mismatch, mism);
            if (mism > tol)
                out.flags.push_back({site, t,
                                     "recovered " + std::to_string(rec) + " vs decision " +
                                         std::to_string(out.value[p])});
        }
    }
    return out;
}

KktReport verify_kkt(const LowerLevelForm& llf, const std::vector<double>& y,
                     const std::vector<double>& lam, const std::vector<double>& mu_lb,
                     const std::vector<double>& mu_ub, const std::vector<double>& price,
                     double tol) {
    KktReport rep;
    const int ncol = static_cast<int>(llf.cols.size());
    const int nrow = static_cast<int>(llf.rows.size());

    std::vector<double> vty(nrow, 0.0);
    for (int k = 0; k < ncol; ++k)
        for (int p = llf.V.col_ptr[k]; p < llf.V.col_ptr[k + 1]; ++p)
            vty[llf.V.row_idx[p]] += llf.V.val[p] * y[k];
    for (int r = 0; r < nrow; ++r)
        rep.primal = std::max(rep.primal, std::abs(vty[r] - llf.w[r]));
    for (int k = 0; k < ncol; ++k) {
        rep.primal = std::max(rep.primal, llf.lb[k] - y[k]);
        rep.primal = std::max(rep.primal, y[k] - llf.ub[k]);
    }

    for (int k = 0; k < ncol; ++k) {
        double g = llf.c[k];
        int pm = llf.price_of_col[k];
        if (pm >= 0 && !price.empty()) g += llf.coupling_value * price[pm];
        for (int p = llf.V.col_ptr[k]; p < llf.V.col_ptr[k + 1]; ++p)
            g -= llf.V.val[p] * lam[llf.V.row_idx[p]];
        g += mu_ub[k] - mu_lb[k];
        rep.stationarity = std::max(rep.stationarity, std::abs(g));
        if (mu_lb[k] < -tol || mu_ub[k] < -tol)
            rep.complementarity = std::max(rep.complementarity, std::max(-mu_lb[k], -mu_ub[k]));
        rep.complementarity =
            std::max(rep.complementarity, std::abs(mu_ub[k]) * std::abs(llf.ub[k] - y[k]));
        rep.complementarity =
            std::max(rep.complementarity, std::abs(mu_lb[k]) * std::abs(y[k] - llf.lb[k]));
    }
    rep.stationarity_pass = rep.stationarity <= tol;
    rep.primal_pass = rep.primal <= tol;
    rep.complementarity_pass = rep.complementarity <= tol;
    rep.pass = rep.stationarity_pass && rep.primal_pass && rep.complementarity_pass;
    return rep;
}

PaymentIdentityReport verify_payment_identity(const LowerLevelForm& llf,
                                              const std::vector<double>& y,
                                              const std::vector<double>& lam,
                                              const std::vector<double>& mu_lb,
                                              const std::vector<double>& mu_ub,
                                              const std::vector<double>& price, double tol) {
    PaymentIdentityReport rep;
    const int ncol = static_cast<int>(llf.cols.size());
    const int nrow = static_cast<int>(llf.rows.size());
    for (int p = 0; p < llf.n_price(); ++p) {
        int k = llf.export_col[p];
        rep.direct += lam[llf.balance_row(llf.cols[k].site, llf.cols[k].t)] * y[k];
        if (!price.empty()) rep.income_numerator += llf.pwf_ll * price[p] * y[k];
    }
    double lin = 0.0;
    for (int r = 0; r < nrow; ++r) lin += llf.w[r] * lam[r];
    for (int k = 0; k < ncol; ++k)
        lin += -llf.c[k] * y[k] - mu_ub[k] * llf.ub[k] + mu_lb[k] * llf.lb[k];
    rep.linearized = lin / llf.v_yexp;
    rep.rel_gap_linearization =
        std::abs(rep.direct - rep.linearized) / (1.0 + std::abs(rep.direct));
    rep.rel_gap_zero_sum =
        std::abs(rep.direct - rep.income_numerator) / (1.0 + std::abs(rep.direct));
    rep.pass = rep.rel_gap_linearization <= tol && rep.rel_gap_zero_sum <= tol;
    return rep;
}

BigMCheck check_bigm_nonbinding(const Model& m, const KktHandles& h, const std::vector<double>& x,
                                double tol) {
    BigMCheck out;
    auto probe = [&](VarId v, double cap, const char* what) {
        if (v < 0 || cap <= 0.0) return;
        double val = std::abs(x.at(v));
        if (val >= cap * (1.0 - tol) - tol) {
            out.ok = false;
            if (out.detail.empty())
                out.detail = std::string(what) + " " + m.variable(v).name + " at " +
                             std::to_string(val) + " of cap " + std::to_string(cap);
        }
    };
    for (std::size_t k = 0; k < h.mu_lb.size(); ++k) {
        probe(h.mu_lb[k], h.m_dual_lb[k], "mu_lb");
        probe(h.mu_ub[k], h.m_dual_ub[k], "mu_ub");
    }
    for (VarId lam : h.lam) {
        const Variable& v = m.variable(lam);
        double span = std::max(std::abs(v.lb), std::abs(v.ub));
        probe(lam, span, "lambda");
    }
    return out;
}

}  // namespace nwa
