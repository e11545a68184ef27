#include "nwa/branch_and_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <queue>

namespace nwa {

namespace {

struct Node {
    long id = 0;
    double bound = -kInf;
    // Chain of bound fixings from the root.
    std::shared_ptr<const Node> parent;
    int fixed_col = -1;
    double fixed_val = 0.0;
    std::shared_ptr<std::vector<std::int8_t>> start;  // parent's optimal statuses
};

struct NodeOrder {
    bool operator()(const std::shared_ptr<const Node>& a,
                    const std::shared_ptr<const Node>& b) const {
        if (a->bound != b->bound) return a->bound > b->bound;  // min-heap on bound
        return a->id > b->id;
    }
};

void apply_fixings(const Node* node, std::vector<double>& lb, std::vector<double>& ub) {
    for (const Node* n = node; n != nullptr; n = n->parent.get()) {
        if (n->fixed_col >= 0) {
            lb[n->fixed_col] = n->fixed_val;
            ub[n->fixed_col] = n->fixed_val;
        }
    }
}

}  // namespace

MipResult branch_and_bound(const StandardLp& relaxed, const BnbConfig& cfg,
                           const RoundingHint& hint) {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    auto out_of_time = [&] {
        if (cfg.time_limit_s <= 0) return false;
        return std::chrono::duration<double>(Clock::now() - t0).count() > cfg.time_limit_s;
    };

    MipResult res;
    const std::vector<int>& ints = relaxed.integer_cols;
    const bool trace = std::getenv("NWA_BNB_TRACE") != nullptr;

    StandardLp lp = relaxed;  // bounds mutated per node
    const std::vector<double> base_lb = relaxed.lb;
    const std::vector<double> base_ub = relaxed.ub;

    bool have_incumbent = false;
    double incumbent = kInf;
    SimplexResult inc_sol;

    auto rel_gap = [&](double bound) {
        if (!have_incumbent) return kInf;
        return (incumbent - bound) / std::max(1e-10, std::abs(incumbent));
    };

    // Degenerate binaries (zero objective, all rows able to absorb the move
    // into their slack) are snapped to the nearest feasible integer first;
    // they carry no information and would otherwise soak up the branching.
    auto snap_free_binaries = [&](std::vector<double>& x) {
        for (int j : ints) {
            if (relaxed.c[j] != 0.0) continue;
            double frac = x[j] - std::round(x[j]);
            if (std::abs(frac) <= cfg.int_tol) continue;
            for (double v : {std::round(x[j]), 1.0 - std::round(x[j])}) {
                double delta = v - x[j];
                bool ok = true;
                for (int p = relaxed.V.col_ptr[j]; p < relaxed.V.col_ptr[j + 1] && ok; ++p) {
                    int r = relaxed.V.row_idx[p];
                    int s = relaxed.slack_of_row[r];
                    if (s < 0) {
                        ok = false;
                        break;
                    }
                    // Slack coefficient is +-1; new slack value must stay in
                    // its bounds.
                    double scoef = 0.0;
                    for (int q = relaxed.V.col_ptr[s]; q < relaxed.V.col_ptr[s + 1]; ++q)
                        if (relaxed.V.row_idx[q] == r) scoef = relaxed.V.val[q];
                    double snew = x[s] - relaxed.V.val[p] * delta / scoef;
                    if (snew < relaxed.lb[s] - 1e-9 || snew > relaxed.ub[s] + 1e-9) ok = false;
                }
                if (!ok) continue;
                for (int p = relaxed.V.col_ptr[j]; p < relaxed.V.col_ptr[j + 1]; ++p) {
                    int r = relaxed.V.row_idx[p];
                    int s = relaxed.slack_of_row[r];
                    double scoef = 0.0;
                    for (int q = relaxed.V.col_ptr[s]; q < relaxed.V.col_ptr[s + 1]; ++q)
                        if (relaxed.V.row_idx[q] == r) scoef = relaxed.V.val[q];
                    x[s] -= relaxed.V.val[p] * delta / scoef;
                }
                x[j] = v;
                break;
            }
        }
    };

    // Most fractional column: max distance from the nearest integer; ties
    // resolve to the lowest column id (ints is ascending, strict compare).
    auto is_integral = [&](const std::vector<double>& x, int* frac_col) {
        int best = -1;
        double best_score = cfg.int_tol;
        for (int c : ints) {
            double dist = std::abs(x[c] - std::round(x[c]));
            if (dist > best_score + 1e-15) {
                best_score = dist;
                best = c;
            }
        }
        if (frac_col) *frac_col = best;
        return best < 0;
    };

    auto try_heuristic = [&](const SimplexResult& rel_sol) {
        if (!hint) return;
        std::vector<std::vector<double>> proposals;
        hint(rel_sol.x, proposals);
        for (const auto& proposal : proposals) {
            if (proposal.size() != ints.size()) continue;
            for (std::size_t i = 0; i < ints.size(); ++i) {
                lp.lb[ints[i]] = proposal[i];
                lp.ub[ints[i]] = proposal[i];
            }
            SimplexOptions sopt = cfg.lp;
            sopt.start = &rel_sol.vstat;
            if (cfg.probe_iter_limit > 0) sopt.max_iter = cfg.probe_iter_limit;
            SimplexResult r = simplex(lp, sopt);
            res.lp_iterations += r.iterations;
            lp.lb = base_lb;
            lp.ub = base_ub;
            if (trace)
                std::fprintf(stderr, "[bnb] heuristic probe status=%d obj=%.6g iters=%ld\n",
                             int(r.status), r.objective, r.iterations);
            if (r.status == LpStatus::Optimal && r.objective < incumbent - 1e-9) {
                incumbent = r.objective;
                inc_sol = std::move(r);
                have_incumbent = true;
                if (trace)
                    std::fprintf(stderr, "[bnb] heuristic incumbent %.6g\n", incumbent);
            }
        }
    };

    // Direct feasibility check of supplied candidate solutions: slacks are
    // reconstructed row by row, bounds and integrality verified, and the
    // objective computed from the cost vector. No LP solve involved.
    auto try_candidate = [&](const std::vector<double>& xin) {
        const int ncols = relaxed.num_cols();
        std::vector<double> x(ncols, 0.0);
        for (std::size_t i = 0; i < xin.size() && i < static_cast<std::size_t>(ncols); ++i)
            x[i] = xin[i];
        // Row residuals: equalities must close, inequality residue goes to
        // the slack column.
        std::vector<double> act(relaxed.num_rows(), 0.0);
        for (int c = 0; c < ncols; ++c) {
            bool is_slack = relaxed.col_to_var.empty() ? false : relaxed.col_to_var[c] < 0;
            if (is_slack) continue;
            double v = x[c];
            if (v == 0.0) continue;
            for (int p = relaxed.V.col_ptr[c]; p < relaxed.V.col_ptr[c + 1]; ++p)
                act[relaxed.V.row_idx[p]] += relaxed.V.val[p] * v;
        }
        const double ftol = 1e-6;
        for (int r = 0; r < relaxed.num_rows(); ++r) {
            int s = relaxed.slack_of_row.empty() ? -1 : relaxed.slack_of_row[r];
            double resid = relaxed.w[r] - act[r];
            if (s < 0) {
                if (std::abs(resid) > ftol * (1.0 + std::abs(relaxed.w[r]))) return;
            } else {
                double scoef = 0.0;
                for (int p = relaxed.V.col_ptr[s]; p < relaxed.V.col_ptr[s + 1]; ++p)
                    if (relaxed.V.row_idx[p] == r) scoef = relaxed.V.val[p];
                double sval = resid / scoef;
                if (sval < relaxed.lb[s] - ftol || sval > relaxed.ub[s] + ftol) return;
                x[s] = std::clamp(sval, relaxed.lb[s], relaxed.ub[s]);
            }
        }
        for (int c = 0; c < ncols; ++c)
            if (x[c] < relaxed.lb[c] - ftol || x[c] > relaxed.ub[c] + ftol) return;
        for (int c : ints)
            if (std::abs(x[c] - std::round(x[c])) > cfg.int_tol) return;
        double obj = 0.0;
        for (int c = 0; c < ncols; ++c) obj += relaxed.c[c] * x[c];
        if (obj < incumbent - 1e-9) {
            incumbent = obj;
            inc_sol = SimplexResult{};
            inc_sol.status = LpStatus::Optimal;
            inc_sol.x = std::move(x);
            inc_sol.objective = obj;
            have_incumbent = true;
            if (trace) std::fprintf(stderr, "[bnb] candidate incumbent %.6g\n", incumbent);
        }
    };
    for (const auto& cand : cfg.initial_solutions) try_candidate(cand);

    // Root relaxation.
    SimplexResult root = simplex(lp, cfg.lp);
    res.lp_iterations += root.iterations;
    ++res.nodes;
    if (trace)
        std::fprintf(stderr, "[bnb] root status=%d obj=%.6g iters=%ld\n", int(root.status),
                     root.objective, root.iterations);
    if (root.status == LpStatus::Infeasible) {
        res.status = MipStatus::Infeasible;
        return res;
    }
    if (root.status == LpStatus::Unbounded) {
        res.status = MipStatus::Unbounded;
        return res;
    }
    if (root.status == LpStatus::IterLimit) {
        res.status = MipStatus::LimitHit;
        return res;
    }

    std::priority_queue<std::shared_ptr<const Node>, std::vector<std::shared_ptr<const Node>>,
                        NodeOrder>
        open;

    long next_id = 1;
    int frac = -1;
    snap_free_binaries(root.x);
    if (is_integral(root.x, &frac)) {
        if (root.objective < incumbent) {
            incumbent = root.objective;
            inc_sol = root;
        }
        have_incumbent = true;
        res.best_bound = root.objective;
        res.status = MipStatus::Optimal;
    } else {
        if (!have_incumbent) try_heuristic(root);
        auto start = std::make_shared<std::vector<std::int8_t>>(root.vstat);
        for (double v : {0.0, 1.0}) {
            auto child = std::make_shared<Node>();
            child->id = next_id++;
            child->bound = root.objective;
            child->fixed_col = frac;
            child->fixed_val = v;
            child->start = start;
            open.push(child);
        }
    }

    bool limits = false;
    while (!open.empty()) {
        double global_lb = open.top()->bound;
        if (have_incumbent) {
            res.gap = rel_gap(global_lb);
            if (res.gap <= cfg.gap_target) break;
            if (global_lb >= incumbent - 1e-9 * (1.0 + std::abs(incumbent))) break;
        }
        if (res.nodes >= cfg.node_limit || out_of_time()) {
            limits = true;
            break;
        }
        auto node = open.top();
        open.pop();

        lp.lb = base_lb;
        lp.ub = base_ub;
        apply_fixings(node.get(), lp.lb, lp.ub);

        SimplexOptions sopt = cfg.lp;
        if (node->start) sopt.start = node->start.get();
        SimplexResult sol = simplex(lp, sopt);
        res.lp_iterations += sol.iterations;
        ++res.nodes;
        if (trace && res.nodes % 10 == 0)
            std::fprintf(stderr,
                         "[bnb] node=%ld open=%zu bound=%.6g inc=%.6g gap=%.4f lpiters=%ld\n",
                         res.nodes, open.size(), node->bound,
                         have_incumbent ? incumbent : kInf, rel_gap(node->bound),
                         res.lp_iterations);

        if (sol.status == LpStatus::Infeasible) continue;
        if (sol.status == LpStatus::IterLimit) {
            limits = true;
            break;
        }
        if (sol.status == LpStatus::Unbounded) {
            // Bounded binaries cannot introduce unboundedness the relaxation
            // lacked; treat defensively as a limit.
            limits = true;
            break;
        }
        if (have_incumbent && sol.objective >= incumbent - 1e-9 * (1.0 + std::abs(incumbent)))
            continue;  // pruned by bound

        int branch_col = -1;
        snap_free_binaries(sol.x);
        if (is_integral(sol.x, &branch_col)) {
            if (sol.objective < incumbent - 1e-9) {
                incumbent = sol.objective;
                inc_sol = std::move(sol);
                have_incumbent = true;
            }
            continue;
        }
        if (cfg.probe_every > 0 && res.nodes % cfg.probe_every == 0) try_heuristic(sol);

        auto start = std::make_shared<std::vector<std::int8_t>>(sol.vstat);
        for (double v : {0.0, 1.0}) {
            auto child = std::make_shared<Node>();
            child->id = next_id++;
            child->bound = sol.objective;
            child->parent = node;
            child->fixed_col = branch_col;
            child->fixed_val = v;
            child->start = start;
            open.push(child);
        }
    }

    double final_lb = open.empty() ? (have_incumbent ? incumbent : -kInf) : open.top()->bound;
    if (have_incumbent) final_lb = std::min(final_lb, incumbent);
    res.best_bound = final_lb;

    if (have_incumbent) {
        res.objective = incumbent;
        res.x = inc_sol.x;
        res.duals = inc_sol.duals;
        res.reduced_costs = inc_sol.reduced_costs;
        res.gap = rel_gap(final_lb);
        if (res.gap < 0) res.gap = 0;
        res.status = (limits && res.gap > cfg.gap_target) ? MipStatus::LimitHit : MipStatus::Optimal;
    } else {
        res.status = limits ? MipStatus::LimitHit : MipStatus::Infeasible;
    }
    return res;
}

}  // namespace nwa
