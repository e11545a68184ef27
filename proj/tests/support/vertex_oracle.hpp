#pragma once

// Brute-force LP oracle: enumerates every basis/bound pattern of the
// standard form and returns the best feasible objective. Independent of the
// simplex implementation path; desk-scale inputs only (n choose m patterns).

#include <cmath>
#include <optional>
#include <vector>

#include "nwa/model.hpp"

namespace nwa::testing {

struct OracleResult {
    bool feasible = false;
    bool unbounded = false;
    double objective = 0.0;
    std::vector<double> x;
};

namespace detail {

// Dense Gaussian elimination solve of square system; false if singular.
inline bool dense_solve(std::vector<std::vector<double>> a, std::vector<double> b,
                        std::vector<double>& out) {
    const int n = static_cast<int>(b.size());
    for (int k = 0; k < n; ++k) {
        int piv = -1;
        double best = 1e-11;
        for (int i = k; i < n; ++i)
            if (std::abs(a[i][k]) > best) {
                best = std::abs(a[i][k]);
                piv = i;
            }
        if (piv < 0) return false;
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (int i = k + 1; i < n; ++i) {
            double f = a[i][k] / a[k][k];
            if (f == 0.0) continue;
            for (int j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    out.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double acc = b[i];
        for (int j = i + 1; j < n; ++j) acc -= a[i][j] * out[j];
        out[i] = acc / a[i][i];
    }
    return true;
}

}  // namespace detail

/// Enumerates all choices of m basic columns and lower/upper assignments of
/// the nonbasic columns; the rest is linear algebra. Columns with an
/// infinite bound on the active side are skipped as nonbasic candidates, so
/// unboundedness shows up as feasibility with no finite optimum candidates.
inline OracleResult enumerate_lp(const StandardLp& lp, double feas_tol = 1e-7) {
    const int n = lp.num_cols();
    const int m = lp.num_rows();
    OracleResult best;

    auto dense = lp.dense_v();

    std::vector<int> comb(m);
    // Iterate subsets of size m of {0..n-1} (basic sets).
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    auto advance = [&]() {
        int i = m - 1;
        while (i >= 0 && idx[i] == n - m + i) --i;
        if (i < 0) return false;
        ++idx[i];
        for (int j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
        return true;
    };
    if (m > n) return best;

    bool more = (m >= 0);
    do {
        std::vector<int> nonbasic;
        std::vector<char> is_basic(n, 0);
        for (int i = 0; i < m; ++i) is_basic[idx[i]] = 1;
        for (int c = 0; c < n; ++c)
            if (!is_basic[c]) nonbasic.push_back(c);

        const int nn = static_cast<int>(nonbasic.size());
        // Each nonbasic at lb (bit 0) or ub (bit 1); skip infinite bounds.
        for (long mask = 0; mask < (1L << nn); ++mask) {
            std::vector<double> xn(nn, 0.0);
            bool ok = true;
            for (int k = 0; k < nn; ++k) {
                double b = (mask >> k) & 1 ? lp.ub[nonbasic[k]] : lp.lb[nonbasic[k]];
                if (!std::isfinite(b)) {
                    ok = false;
                    break;
                }
                xn[k] = b;
            }
            if (!ok) continue;
            std::vector<double> rhs = lp.w;
            for (int k = 0; k < nn; ++k) {
                int c = nonbasic[k];
                if (xn[k] == 0.0) continue;
                for (int p = lp.V.col_ptr[c]; p < lp.V.col_ptr[c + 1]; ++p)
                    rhs[lp.V.row_idx[p]] -= lp.V.val[p] * xn[k];
            }
            std::vector<std::vector<double>> bmat(m, std::vector<double>(m, 0.0));
            for (int i = 0; i < m; ++i) {
                int c = idx[i];
                for (int r = 0; r < m; ++r) bmat[r][i] = dense[r][c];
            }
            std::vector<double> xb;
            if (!detail::dense_solve(bmat, rhs, xb)) continue;
            bool feas = true;
            for (int i = 0; i < m && feas; ++i) {
                int c = idx[i];
                if (xb[i] < lp.lb[c] - feas_tol || xb[i] > lp.ub[c] + feas_tol) feas = false;
            }
            if (!feas) continue;
            std::vector<double> x(n, 0.0);
            for (int k = 0; k < nn; ++k) x[nonbasic[k]] = xn[k];
            for (int i = 0; i < m; ++i) x[idx[i]] = xb[i];
            double obj = lp.objective_constant;
            for (int c = 0; c < n; ++c) obj += lp.c[c] * x[c];
            if (!best.feasible || obj < best.objective) {
                best.feasible = true;
                best.objective = obj;
                best.x = x;
            }
        }
    } while ((more = advance()));

    return best;
}

}  // namespace nwa::testing
