#include "nwa/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace nwa {

namespace {

class Lu {
public:
    int m = 0;
    // Factor f: pivot row prow[f]; L column entries (row, val) with unit
    // diagonal; U column entries (factor, val) above the diagonal udiag[f].
    std::vector<int> prow, pinv, forder_of_slot;
    std::vector<std::vector<std::pair<int, double>>> lcol, ucol;
    std::vector<double> udiag;

    bool factorize(const StandardLp& lp, const std::vector<int>& basis) {
        m = static_cast<int>(basis.size());
        prow.assign(m, -1);
        pinv.assign(m, -1);
        forder_of_slot.assign(m, -1);
        lcol.assign(m, {});
        ucol.assign(m, {});
        udiag.assign(m, 0.0);

        std::vector<int> order(m);
        for (int i = 0; i < m; ++i) order[i] = i;
        auto nnz_of = [&](int slot) {
            int c = basis[slot];
            return c < 0 ? 1 : lp.V.col_ptr[c + 1] - lp.V.col_ptr[c];
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return nnz_of(a) < nnz_of(b); });

        std::vector<double> work(m, 0.0);
        std::vector<std::int8_t> seen(m, 0);
        std::vector<int> topo;
        std::vector<std::pair<int, int>> stack;
        topo.reserve(64);

        for (int f = 0; f < m; ++f) {
            int slot = order[f];
            forder_of_slot[slot] = f;

            topo.clear();
            auto dfs = [&](int r0) {
                if (seen[r0]) return;
                stack.clear();
                stack.push_back({r0, 0});
                seen[r0] = 1;
                while (!stack.empty()) {
                    auto& top = stack.back();
                    int r = top.first;
                    int fi = pinv[r];
                    bool descended = false;
                    if (fi >= 0) {
                        auto& edges = lcol[fi];
                        while (top.second < static_cast<int>(edges.size())) {
                            int nr = edges[top.second].first;
                            ++top.second;
                            if (!seen[nr]) {
                                seen[nr] = 1;
                                stack.push_back({nr, 0});
                                descended = true;
                                break;
                            }
                        }
                    }
                    if (descended) continue;
                    if (fi < 0 || stack.back().second >= static_cast<int>(lcol[fi].size())) {
                        topo.push_back(r);
                        stack.pop_back();
                    }
                }
            };

            int c = basis[slot];
            if (c < 0) {
                int r = -c - 1;
                work[r] = 1.0;
                dfs(r);
            } else {
                for (int p = lp.V.col_ptr[c]; p < lp.V.col_ptr[c + 1]; ++p) {
                    work[lp.V.row_idx[p]] = lp.V.val[p];
                    dfs(lp.V.row_idx[p]);
                }
            }

            // Eliminate in topological order (reverse of finish order gives
            // dependencies first; we must apply pivots before dependents).
            for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
                int r = *it;
                int fi = pinv[r];
                if (fi < 0) continue;
                double xr = work[r];
                if (xr == 0.0) continue;
                for (const auto& [rr, lv] : lcol[fi]) work[rr] -= lv * xr;
            }

            // Pivot selection among unpivoted rows.
            double best = 0.0;
            int best_row = -1;
            for (int r : topo) {
                if (pinv[r] >= 0) continue;
                double a = std::abs(work[r]);
                if (a > best + 1e-300 || (a == best && (best_row < 0 || r < best_row))) {
                    if (a > best || (a == best && (best_row < 0 || r < best_row))) {
                        best = a;
                        best_row = r;
                    }
                }
            }
            if (best_row < 0 || best < 1e-11) {
                for (int r : topo) {
                    work[r] = 0.0;
                    seen[r] = 0;
                }
                return false;
            }

            double piv = work[best_row];
            auto& uc = ucol[f];
            auto& lc = lcol[f];
            for (int r : topo) {
                double v = work[r];
                work[r] = 0.0;
                seen[r] = 0;
                if (v == 0.0) continue;
                if (pinv[r] >= 0)
                    uc.emplace_back(pinv[r], v);
                else if (r != best_row)
                    lc.emplace_back(r, v / piv);
            }
            std::sort(uc.begin(), uc.end());
            std::sort(lc.begin(), lc.end());
            udiag[f] = piv;
            pinv[best_row] = f;
            prow[f] = best_row;
        }
        return true;
    }

    // y := B^{-1} rhs ; rhs indexed by row, result indexed by basis slot.
    void ftran(std::vector<double>& v, std::vector<double>& scratch) const {
        scratch.assign(m, 0.0);
        for (int f = 0; f < m; ++f) {
            int r = prow[f];
            double wf = v[r];
            scratch[f] = wf;
            if (wf != 0.0)
                for (const auto& [rr, lv] : lcol[f]) v[rr] -= lv * wf;
        }
        for (int f = m - 1; f >= 0; --f) {
            double zf = scratch[f] / udiag[f];
            scratch[f] = zf;
            if (zf != 0.0)
                for (const auto& [f2, uv] : ucol[f]) scratch[f2] -= uv * zf;
        }
        // v[slot] = z[factor of slot]
        for (int slot = 0; slot < m; ++slot) v[slot] = scratch[forder_of_slot[slot]];
    }

    // y := B^{-T} rhs ; rhs indexed by basis slot, result indexed by row.
    void btran(std::vector<double>& v, std::vector<double>& scratch) const {
        scratch.assign(m, 0.0);
        for (int slot = 0; slot < m; ++slot) scratch[forder_of_slot[slot]] = v[slot];
        for (int f = 0; f < m; ++f) {
            double wf = scratch[f];
            for (const auto& [f2, uv] : ucol[f]) wf -= uv * scratch[f2];
            scratch[f] = wf / udiag[f];
        }
        std::fill(v.begin(), v.end(), 0.0);
        for (int f = m - 1; f >= 0; --f) {
            double yf = scratch[f];
            for (const auto& [rr, lv] : lcol[f]) yf -= lv * v[rr];
            v[prow[f]] = yf;
        }
    }
};

struct Eta {
    int slot;  // basis position replaced
    double pivot;
    std::vector<std::pair<int, double>> col;  // other slots' coefficients
};

class SimplexEngine {
public:
    SimplexEngine(const StandardLp& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {
        n_ = lp.num_cols();
        m_ = lp.num_rows();
        ncols_ = n_ + m_;  // artificials appended
    }

    SimplexResult run() {
        init();
        SimplexResult res;
        if (!phase1()) {
            if (iter_ >= opt_.max_iter) {
                res.status = LpStatus::IterLimit;
            } else {
                res.status = LpStatus::Infeasible;
            }
            finish(res);
            return res;
        }
        LpStatus st = phase2();
        res.status = st;
        finish(res);
        return res;
    }

private:
    const StandardLp& lp_;
    SimplexOptions opt_;
    int n_ = 0, m_ = 0, ncols_ = 0;
    std::vector<std::int8_t> vstat_;
    std::vector<int> basis_;      // slot -> column id (artificial = n_+row)
    std::vector<int> basis_pos_;  // column id -> slot or -1
    std::vector<double> xval_;    // all columns
    Lu lu_;
    std::vector<Eta> etas_;
    std::vector<double> work_, scratch_, lambda_, wcol_, weights_, rho_;
    std::vector<int> wpat_;
    double tracked_obj_ = 0.0;
    long iter_ = 0;
    long degen_ = 0;
    bool basis_reset_ = false;
    int since_refactor_ = 0;
    long stall_ = 0;
    bool bland_ = false;
    double last_merit_ = kInf;

    double col_lb(int c) const { return c < n_ ? lp_.lb[c] : 0.0; }
    double col_ub(int c) const { return c < n_ ? lp_.ub[c] : 0.0; }
    double col_cost(int c) const { return c < n_ ? lp_.c[c] : 0.0; }

    template <typename F>
    void for_col(int c, F&& f) const {
        if (c < n_) {
            for (int p = lp_.V.col_ptr[c]; p < lp_.V.col_ptr[c + 1]; ++p)
                f(lp_.V.row_idx[p], lp_.V.val[p]);
        } else {
            f(c - n_, 1.0);
        }
    }

    void init() {
        vstat_.assign(ncols_, kAtLower);
        bool hinted = false;
        if (opt_.start && static_cast<int>(opt_.start->size()) == ncols_) {
            vstat_ = *opt_.start;
            int nb = 0;
            for (int c = 0; c < ncols_; ++c)
                if (vstat_[c] == kBasic) ++nb;
            hinted = (nb == m_);
        }
        if (!hinted) cold_start();
        if (!rebuild_basis()) {
            // Hinted basis singular: cold start.
            cold_start();
            if (!rebuild_basis())
                throw std::runtime_error("simplex: artificial basis failed to factorize");
        }
        weights_.assign(ncols_, 1.0);
    }

    // Crash: greedy triangular basis (alternating row- and column-singleton
    // elimination over the sparsity pattern). Slack-bearing rows take their
    // slack first; rows left unmatched keep an artificial. The composite
    // phase 1 then repairs whatever starts outside its bounds.
    void cold_start() {
        for (int c = 0; c < n_; ++c) vstat_[c] = default_nb_status(c);
        for (int r = 0; r < m_; ++r) vstat_[n_ + r] = kBasic;

        std::vector<char> row_done(m_, 0);
        std::vector<char> col_gone(n_, 0);
        auto assign = [&](int r, int c) {
            vstat_[c] = kBasic;
            vstat_[n_ + r] = kAtLower;
            row_done[r] = 1;
            col_gone[c] = 1;
        };

        // Row-major pattern for the singleton sweeps.
        std::vector<int> row_ptr(m_ + 1, 0), row_cols(lp_.V.nnz());
        {
            std::vector<int> cnt(m_, 0);
            for (int c = 0; c < n_; ++c)
                for (int p = lp_.V.col_ptr[c]; p < lp_.V.col_ptr[c + 1]; ++p)
                    ++cnt[lp_.V.row_idx[p]];
            for (int r = 0; r < m_; ++r) row_ptr[r + 1] = row_ptr[r] + cnt[r];
            std::vector<int> fill = row_ptr;
            for (int c = 0; c < n_; ++c)
                for (int p = lp_.V.col_ptr[c]; p < lp_.V.col_ptr[c + 1]; ++p) {
                    if (std::abs(lp_.V.val[p]) > 1e-9) row_cols[fill[lp_.V.row_idx[p]]++] = c;
                    else row_cols[fill[lp_.V.row_idx[p]]++] = -1;
                }
        }

        // Fixed columns never enter a basis.
        for (int c = 0; c < n_; ++c)
            if (lp_.lb[c] == lp_.ub[c]) col_gone[c] = 1;

        // Slacks first.
        if (!lp_.slack_of_row.empty()) {
            for (int r = 0; r < m_; ++r) {
                int s = lp_.slack_of_row[r];
                if (s >= 0 && !col_gone[s]) assign(r, s);
            }
        }

        std::vector<int> row_live(m_, 0), col_live(n_, 0);
        for (int r = 0; r < m_; ++r) {
            if (row_done[r]) continue;
            for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
                if (row_cols[p] >= 0 && !col_gone[row_cols[p]]) ++row_live[r];
        }
        for (int c = 0; c < n_; ++c) {
            if (col_gone[c]) continue;
            for (int p = lp_.V.col_ptr[c]; p < lp_.V.col_ptr[c + 1]; ++p)
                if (!row_done[lp_.V.row_idx[p]] && std::abs(lp_.V.val[p]) > 1e-9) ++col_live[c];
        }

        std::vector<int> queue;
        auto enqueue_candidates = [&]() {
            queue.clear();
            for (int r = 0; r < m_; ++r)
                if (!row_done[r] && row_live[r] == 1) queue.push_back(r);
            for (int c = 0; c < n_; ++c)
                if (!col_gone[c] && col_live[c] == 1) queue.push_back(m_ + c);
        };

        auto retire_col = [&](int c) {
            col_gone[c] = 1;
            for (int p = lp_.V.col_ptr[c]; p < lp_.V.col_ptr[c + 1]; ++p) {
                int r = lp_.V.row_idx[p];
                if (!row_done[r] && std::abs(lp_.V.val[p]) > 1e-9) --row_live[r];
            }
        };
        auto retire_row = [&](int r) {
            row_done[r] = 1;
            for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
                int c = row_cols[p];
                if (c >= 0 && !col_gone[c]) --col_live[c];
            }
        };

        enqueue_candidates();
        std::size_t qi = 0;
        while (qi < queue.size()) {
            int item = queue[qi++];
            if (item < m_) {
                int r = item;
                if (row_done[r] || row_live[r] != 1) continue;
                int pick = -1;
                for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
                    int c = row_cols[p];
                    if (c >= 0 && !col_gone[c]) pick = c;
                }
                if (pick < 0) continue;
                vstat_[pick] = kBasic;
                vstat_[n_ + r] = kAtLower;
                row_done[r] = 1;
                retire_col(pick);
                retire_row(r);
            } else {
                int c = item - m_;
                if (col_gone[c] || col_live[c] != 1) continue;
                int pick = -1;
                for (int p = lp_.V.col_ptr[c]; p < lp_.V.col_ptr[c + 1]; ++p) {
                    int r = lp_.V.row_idx[p];
                    if (!row_done[r] && std::abs(lp_.V.val[p]) > 1e-9) pick = r;
                }
                if (pick < 0) continue;
                vstat_[c] = kBasic;
                vstat_[n_ + pick] = kAtLower;
                retire_row(pick);
                retire_col(c);
            }
            // Refill the queue lazily when drained.
            if (qi == queue.size()) {
                std::vector<int> next;
                for (int r = 0; r < m_; ++r)
                    if (!row_done[r] && row_live[r] == 1) next.push_back(r);
                for (int c = 0; c < n_; ++c)
                    if (!col_gone[c] && col_live[c] == 1) next.push_back(m_ + c);
                if (!next.empty()) {
                    queue.insert(queue.end(), next.begin(), next.end());
                }
            }
        }
        // Unmatched rows keep their artificial in the basis.
    }

    std::int8_t default_nb_status(int c) const {
        double l = col_lb(c), u = col_ub(c);
        if (l == -kInf && u == kInf) return kFreeZero;
        if (l == -kInf) return kAtUpper;
        if (u == kInf) return kAtLower;
        return (std::abs(l) <= std::abs(u)) ? kAtLower : kAtUpper;
    }

    double nb_value(int c) const {
        switch (vstat_[c]) {
            case kAtLower: return col_lb(c);
            case kAtUpper: return col_ub(c);
            default: return 0.0;
        }
    }

    bool rebuild_basis() {
        basis_.clear();
        basis_pos_.assign(ncols_, -1);
        for (int c = 0; c < ncols_; ++c)
            if (vstat_[c] == kBasic) {
                basis_pos_[c] = static_cast<int>(basis_.size());
                basis_.push_back(c < n_ ? c : -(c - n_) - 1);
            }
        if (static_cast<int>(basis_.size()) != m_) return false;
        if (!lu_.factorize(lp_, basis_)) return false;
        etas_.clear();
        since_refactor_ = 0;
        compute_basics();
        return true;
    }

    void refactorize() {
        if (!lu_.factorize(lp_, basis_)) {
            // Numerically singular basis: restart from a fresh crash. The
            // caller must re-establish primal feasibility via phase 1.
            cold_start();
            basis_reset_ = true;
            if (!rebuild_basis())
                throw std::runtime_error("simplex: refactorization failed");
            return;
        }
        etas_.clear();
        since_refactor_ = 0;
        compute_basics();
    }

    // x_B = B^{-1} (w - N x_N)
    void compute_basics() {
        xval_.assign(ncols_, 0.0);
        work_.assign(m_, 0.0);
        for (int r = 0; r < m_; ++r) work_[r] = lp_.w[r];
        for (int c = 0; c < ncols_; ++c) {
            if (vstat_[c] == kBasic) continue;
            double v = nb_value(c);
            xval_[c] = v;
            if (v != 0.0)
                for_col(c, [&](int r, double a) { work_[r] -= a * v; });
        }
        ftran(work_);
        for (int s = 0; s < m_; ++s) {
            int c = basis_col(s);
            xval_[c] = work_[s];
        }
        tracked_obj_ = 0.0;
        for (int c = 0; c < ncols_; ++c)
            if (xval_[c] != 0.0) tracked_obj_ += col_cost(c) * xval_[c];
    }

    int basis_col(int slot) const {
        int b = basis_[slot];
        return b >= 0 ? b : n_ + (-b - 1);
    }

    void ftran(std::vector<double>& v) {
        lu_.ftran(v, scratch_);
        for (const Eta& e : etas_) {
            double t = v[e.slot] / e.pivot;
            v[e.slot] = t;
            if (t != 0.0)
                for (const auto& [s, a] : e.col) v[s] -= a * t;
        }
    }

    void btran(std::vector<double>& v) {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double acc = v[it->slot];
            for (const auto& [s, a] : it->col) acc -= a * v[s];
            v[it->slot] = acc / it->pivot;
        }
        lu_.btran(v, scratch_);
    }

    // Total primal infeasibility of basics and the phase-1 gradient.
    double infeasibility(std::vector<double>* grad) {
        double total = 0.0;
        if (grad) grad->assign(m_, 0.0);
        for (int s = 0; s < m_; ++s) {
            int c = basis_col(s);
            double x = xval_[c], l = col_lb(c), u = col_ub(c);
            if (x < l - opt_.feas_tol) {
                total += l - x;
                if (grad) (*grad)[s] = -1.0;
            } else if (x > u + opt_.feas_tol) {
                total += x - u;
                if (grad) (*grad)[s] = 1.0;
            }
        }
        return total;
    }

    // One simplex iteration against cost vector implied by `phase1`.
    // Returns: 0 = stepped, 1 = optimal/feasible reached, 2 = unbounded,
    //          3 = iteration limit.
    int iterate(bool phase1) {
        if (++iter_ > opt_.max_iter) return 3;
        if (since_refactor_ >= refactor_period()) refactorize();

        std::vector<double> cb(m_, 0.0);
        double merit;
        if (phase1) {
            merit = infeasibility(&cb);
            if (merit <= opt_.feas_tol * (1.0 + std::abs(merit))) return 1;
        } else {
            for (int s = 0; s < m_; ++s) cb[s] = col_cost(basis_col(s));
            merit = tracked_obj_;
        }
        if (merit < last_merit_ - 1e-9 * (1.0 + std::abs(last_merit_))) {
            last_merit_ = merit;
            stall_ = 0;
            // leave bland mode once progress resumes
            bland_ = false;
        } else if (++stall_ > opt_.stall_limit) {
            bland_ = true;
        }

        lambda_ = cb;
        btran(lambda_);

        // Devex pricing: maximize d^2 / weight among eligible columns.
        int enter = -1;
        double enter_d = 0.0;
        const double tol = phase1 ? opt_.feas_tol : opt_.opt_tol;
        double best_score = 0.0;
        int dir = 0;
        for (int c = 0; c < ncols_; ++c) {
            std::int8_t st = vstat_[c];
            if (st == kBasic) continue;
            double l = col_lb(c), u = col_ub(c);
            if (l == u) continue;  // fixed columns never enter
            double d = (phase1 ? 0.0 : col_cost(c));
            for_col(c, [&](int r, double a) { d -= a * lambda_[r]; });
            int cand_dir = 0;
            if ((st == kAtLower || st == kFreeZero) && d < -tol) {
                cand_dir = +1;
            } else if ((st == kAtUpper || st == kFreeZero) && d > tol) {
                cand_dir = -1;
            }
            if (cand_dir == 0) continue;
            if (bland_) {
                enter = c;
                dir = cand_dir;
                enter_d = d;
                break;  // first eligible (lowest index)
            }
            double score = d * d / weights_[c];
            if (score > best_score + 1e-300) {
                best_score = score;
                enter = c;
                dir = cand_dir;
                enter_d = d;
            }
        }
        if (enter < 0) return 1;  // optimal for this phase

        // Column of the entering variable through the basis.
        work_.assign(m_, 0.0);
        for_col(enter, [&](int r, double a) { work_[r] = a; });
        ftran(work_);
        wcol_ = work_;  // wcol_[slot]
        wpat_.clear();
        for (int s = 0; s < m_; ++s)
            if (std::abs(wcol_[s]) > opt_.pivot_tol) wpat_.push_back(s);

        // Ratio test: entering moves t >= 0 in direction dir; basic slot s
        // changes by -dir * wcol_[s] per unit.
        double limit = col_ub(enter) - col_lb(enter);  // own range (inf ok)
        if (vstat_[enter] == kFreeZero) limit = kInf;
        double best_t = limit;
        int leave_slot = -1;
        double leave_pivot = 0.0;
        int leave_to = 0;  // kAtLower/kAtUpper target for leaving variable

        for (int s : wpat_) {
            double wv = wcol_[s];
            double delta = -dir * wv;  // per-unit change of basic s
            int c = basis_col(s);
            double x = xval_[c], l = col_lb(c), u = col_ub(c);
            double t = kInf;
            int to = 0;
            if (phase1 && x < l - opt_.feas_tol) {
                if (delta > 0) {
                    t = (l - x) / delta;
                    to = kAtLower;
                }
            } else if (phase1 && x > u + opt_.feas_tol) {
                if (delta < 0) {
                    t = (u - x) / delta;
                    to = kAtUpper;
                }
            } else {
                if (delta < 0 && l != -kInf) {
                    t = (l - x) / delta;
                    to = kAtLower;
                } else if (delta > 0 && u != kInf) {
                    t = (u - x) / delta;
                    to = kAtUpper;
                }
            }
            if (t == kInf) continue;
            if (t < 0) t = 0;
            bool better = false;
            if (t < best_t - 1e-10) {
                better = true;
            } else if (t <= best_t + 1e-10 && leave_slot >= 0) {
                if (bland_) {
                    better = basis_col(s) < basis_col(leave_slot);
                } else {
                    better = std::abs(wv) > std::abs(leave_pivot) + 1e-12;
                }
            } else if (leave_slot < 0 && t <= best_t) {
                better = true;
            }
            if (better) {
                best_t = t;
                leave_slot = s;
                leave_pivot = wv;
                leave_to = to;
            }
        }

        if (leave_slot < 0 && best_t == kInf) {
            return phase1 ? 1 : 2;  // phase1: cannot improve => let caller re-check
        }

        double t = best_t;
        if (t < 1e-12) ++degen_;
        // Apply the step.
        double enter_from = xval_[enter];
        double enter_to_val = enter_from + dir * t;
        if (t != 0.0) {
            for (int s : wpat_) {
                int c = basis_col(s);
                xval_[c] -= dir * t * wcol_[s];
            }
            if (!phase1) tracked_obj_ += t * dir * enter_d;
        }
        xval_[enter] = enter_to_val;

        if (leave_slot < 0) {
            // Bound flip: entering moved across its range, stays nonbasic.
            vstat_[enter] = (dir > 0) ? kAtUpper : kAtLower;
            return 0;
        }

        // Devex reference weight update via the pivot row.
        if (!bland_) update_devex(enter, leave_slot);

        int leave_col = basis_col(leave_slot);
        // Snap the leaving variable onto its bound to kill drift.
        xval_[leave_col] = (leave_to == kAtUpper) ? col_ub(leave_col) : col_lb(leave_col);
        vstat_[leave_col] = static_cast<std::int8_t>(leave_to);
        vstat_[enter] = kBasic;
        basis_pos_[leave_col] = -1;
        basis_pos_[enter] = leave_slot;
        basis_[leave_slot] = enter < n_ ? enter : -(enter - n_) - 1;

        Eta e;
        e.slot = leave_slot;
        e.pivot = wcol_[leave_slot];
        for (int s : wpat_)
            if (s != leave_slot) e.col.emplace_back(s, wcol_[s]);
        etas_.push_back(std::move(e));
        ++since_refactor_;
        return 0;
    }

    int refactor_period() const {
        if (opt_.refactor_every > 0) return opt_.refactor_every;
        return std::clamp(m_ / 100, 50, 300);
    }

    // Forrest-Goldfarb style update: w_j = max(w_j, (alpha_rj / alpha_rq)^2 w_q)
    // over the pivot row; the leaving column restarts at max(w_q/a^2, 1).
    void update_devex(int enter, int leave_slot) {
        double piv = wcol_[leave_slot];
        if (piv == 0.0) return;
        double wq = std::max(weights_[enter], 1.0);
        double wq_scaled = wq / (piv * piv);

        rho_.assign(m_, 0.0);
        rho_[leave_slot] = 1.0;
        btran(rho_);  // row of B^{-1}
        for (int c = 0; c < ncols_; ++c) {
            if (vstat_[c] == kBasic || c == enter) continue;
            double arj = 0.0;
            for_col(c, [&](int r, double a) { arj += a * rho_[r]; });
            if (arj != 0.0) {
                double cand = arj * arj * wq_scaled;
                if (cand > weights_[c]) weights_[c] = cand;
            }
        }
        int leave_col = basis_col(leave_slot);
        weights_[leave_col] = std::max(wq_scaled, 1.0);
        weights_[enter] = 1.0;
    }

    bool phase1() {
        last_merit_ = kInf;
        stall_ = 0;
        bland_ = false;
        for (;;) {
            double inf0 = infeasibility(nullptr);
            if (inf0 <= opt_.feas_tol) return true;
            int rc = iterate(true);
            if (rc == 0) continue;
            if (rc == 3) return false;  // iteration limit
            // rc == 1: phase-1 optimal; feasible iff infeasibility ~ 0
            double inf1 = infeasibility(nullptr);
            if (inf1 <= 1e2 * opt_.feas_tol) return true;
            // One refactorization retry guards against numerical drift.
            refactorize();
            double inf2 = infeasibility(nullptr);
            if (inf2 <= 1e2 * opt_.feas_tol) return true;
            if (rc == 1) return false;  // genuinely infeasible
        }
    }

    LpStatus phase2() {
        last_merit_ = kInf;
        stall_ = 0;
        bland_ = false;
        for (;;) {
            int rc = iterate(false);
            if (basis_reset_) {
                basis_reset_ = false;
                if (!phase1()) return LpStatus::IterLimit;
                last_merit_ = kInf;
                stall_ = 0;
                bland_ = false;
                continue;
            }
            if (rc == 0) continue;
            if (rc == 1) return LpStatus::Optimal;
            if (rc == 2) return LpStatus::Unbounded;
            return LpStatus::IterLimit;
        }
    }

    void finish(SimplexResult& res) {
        // Fresh factorization for clean primal/dual extraction.
        if (res.status == LpStatus::Optimal || res.status == LpStatus::Infeasible) {
            refactorize();
        }
        res.iterations = iter_;
        if (std::getenv("NWA_SIMPLEX_STATS"))
            std::fprintf(stderr, "[simplex] iters=%ld degenerate=%ld (%.0f%%)\n", iter_, degen_,
                         iter_ ? 100.0 * degen_ / iter_ : 0.0);
        res.vstat = vstat_;
        res.x.assign(n_, 0.0);
        for (int c = 0; c < n_; ++c) res.x[c] = xval_[c];

        std::vector<double> cb(m_, 0.0);
        for (int s = 0; s < m_; ++s) cb[s] = col_cost(basis_col(s));
        lambda_ = cb;
        btran(lambda_);
        res.duals = lambda_;
        res.reduced_costs.assign(n_, 0.0);
        double obj = lp_.objective_constant;
        for (int c = 0; c < n_; ++c) obj += lp_.c[c] * xval_[c];
        res.objective = obj;
        for (int c = 0; c < n_; ++c) {
            double d = lp_.c[c];
            for_col(c, [&](int r, double a) { d -= a * lambda_[r]; });
            res.reduced_costs[c] = d;
        }
        if (res.status == LpStatus::Optimal) {
            // Strong duality audit: c'x = w'λ + Σ_nonbasic d_j x_j.
            double dual_obj = lp_.objective_constant;
            for (int r = 0; r < m_; ++r) dual_obj += lp_.w[r] * lambda_[r];
            for (int c = 0; c < n_; ++c)
                if (vstat_[c] != kBasic) dual_obj += res.reduced_costs[c] * xval_[c];
            res.duality_gap_rel = std::abs(obj - dual_obj) / (1.0 + std::abs(obj));
        }
    }
};

}  // namespace

SimplexResult simplex(const StandardLp& lp, const SimplexOptions& opt) {
    SimplexEngine engine(lp, opt);
    return engine.run();
}

}  // namespace nwa
