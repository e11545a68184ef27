#pragma once

#include <string>
#include <vector>

#include "nwa/investor.hpp"
#include "nwa/model.hpp"

namespace nwa {

struct KktConfig {
    /// Multiplies every dual box / big-M; the non-binding check escalates
    /// this by 10x and rebuilds when a cap turns out active.
    double bigm_scale = 1.0;
    double price_cap = 0.0;  // x-bar-lambda, effective $/kWh
    /// Reference lower-level solution (zero signal) used for the investor
    /// optimality bound; empty disables the bound row.
    std::vector<double> reference_y;
    double reference_objective = 0.0;
};

/// Handles into the single-level KKT embedding.
struct KktHandles {
    std::vector<VarId> y;      // per LL column
    std::vector<VarId> lam;    // per LL row
    std::vector<VarId> mu_lb;  // per LL column
    std::vector<VarId> mu_ub;
    std::vector<VarId> u_lb, u_ub;  // complementarity binaries (-1 on fixed cols)
    std::vector<VarId> u_impexp;    // per (site,t), -1 when trivially resolved
    std::vector<VarId> price;       // x-lambda per (site,t)
    std::vector<double> m_dual_lb, m_dual_ub;  // big-M per column pair
    ConId investor_bound_row = -1;
};

/// Embeds the lower-level KKT system into the planner model: primal rows,
/// stationarity c + Bx - V'lam + mu_ub - mu_lb = 0, big-M complementarity
/// binaries, and import/export exclusion. Dual variables carry per-pair
/// boxes derived from the price scale; columns with equal bounds skip the
/// complementarity machinery (both bounds bind).
KktHandles kkt_reformulate(Model& m, const LowerLevelForm& llf, const KktConfig& cfg);

/// The bilinear payment sum(lam * y_exp) as the linear expression
/// (1/V_yexp) (w'lam - c'y - mu_ub'ub + mu_lb'lb).
LinExpr linearized_payment(const LowerLevelForm& llf, const KktHandles& h);

struct PriceSignal {
    int steps = 0;
    std::vector<double> value;  // [site*T + t], effective $/kWh
    struct Flag {
        int site, t;
        std::string reason;
    };
    std::vector<Flag> flags;
    double max_mismatch = 0.0;
};

/// Reads the price decision variables and cross-checks lam = pwf_ll * x
/// wherever the export sits strictly between its bounds.
PriceSignal recover_price_signal(const LowerLevelForm& llf, const KktHandles& h,
                                 const std::vector<double>& x, double tol = 1e-6);

struct KktReport {
    double stationarity = 0.0;
    double primal = 0.0;
    double complementarity = 0.0;
    bool stationarity_pass = false;
    bool primal_pass = false;
    bool complementarity_pass = false;
    bool pass = false;
};

KktReport verify_kkt(const LowerLevelForm& llf, const std::vector<double>& y,
                     const std::vector<double>& lam, const std::vector<double>& mu_lb,
                     const std::vector<double>& mu_ub, const std::vector<double>& price,
                     double tol);

struct PaymentIdentityReport {
    double direct = 0.0;      // sum lam * y_exp
    double linearized = 0.0;  // the Eq-4 right-hand side
    double income_numerator = 0.0;  // b * sum x * y_exp
    double rel_gap_linearization = 0.0;
    double rel_gap_zero_sum = 0.0;
    bool pass = false;
};

PaymentIdentityReport verify_payment_identity(const LowerLevelForm& llf,
                                              const std::vector<double>& y,
                                              const std::vector<double>& lam,
                                              const std::vector<double>& mu_lb,
                                              const std::vector<double>& mu_ub,
                                              const std::vector<double>& price, double tol);

struct BigMCheck {
    bool ok = true;
    std::string detail;
};

/// True when no dual sits within tol*M of its cap at the solved point.
BigMCheck check_bigm_nonbinding(const Model& m, const KktHandles& h, const std::vector<double>& x,
                                double tol = 1e-6);

}  // namespace nwa
