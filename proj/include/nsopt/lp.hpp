#pragma once

#include <limits>

#include "nsopt/vector_ops.hpp"

namespace nsopt {

// min <c,x>  s.t.  A x <= b,  lo <= x <= hi.
// Entries of lo/hi may be +-infinity. Desk-scale dense instances only.
struct LpProblem {
    Mat A;  // may have zero rows
    Vec b;
    Vec c;
    Vec lo, hi;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Vec x;
    double value = 0.0;
};

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
    }
    return "?";
}

namespace detail {

constexpr double LP_TOL = 1e-9;

// Two-phase tableau simplex on standard form min <c,z>, M z = d, z >= 0,
// with Bland's entering/leaving rule for anti-cycling.
class SimplexTableau {
  public:
    SimplexTableau(const Mat& M, const Vec& d, const Vec& c)
        : m_(M.rows), n_(M.cols), t_(M.rows + 1, M.cols + 1) {
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) t_(i, j) = M(i, j);
            t_(i, n_) = d[i];
            if (t_(i, n_) < 0.0) {  // keep rhs nonnegative for phase 1
                for (std::size_t j = 0; j <= n_; ++j) t_(i, j) = -t_(i, j);
            }
        }
        cost_ = c;
    }

    LpStatus run(Vec& x_out) {
        // Phase 1: artificial variable per row.
        Mat t1(m_ + 1, n_ + m_ + 1);
        std::vector<std::size_t> basis(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) t1(i, j) = t_(i, j);
            t1(i, n_ + i) = 1.0;
            t1(i, n_ + m_) = t_(i, n_);
            basis[i] = n_ + i;
        }
        // Phase-1 objective row: minimize sum of artificials.
        for (std::size_t j = 0; j <= n_ + m_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m_; ++i) s += t1(i, j);
            t1(m_, j) = (j >= n_ && j < n_ + m_) ? s - 1.0 : s;
        }
        if (!pivot_loop(t1, basis, n_ + m_)) return LpStatus::unbounded;  // cannot happen in phase 1
        if (t1(m_, n_ + m_) > LP_TOL) return LpStatus::infeasible;

        // Drive remaining artificials out of the basis when possible.
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis[i] < n_) continue;
            std::size_t enter = n_;
            for (std::size_t j = 0; j < n_; ++j)
                if (std::abs(t1(i, j)) > LP_TOL) {
                    enter = j;
                    break;
                }
            if (enter == n_) continue;  // redundant row; artificial stays at zero
            pivot(t1, i, enter, n_ + m_);
            basis[i] = enter;
        }

        // Phase 2 tableau: original columns only, reduced costs from cost_.
        Mat t2(m_ + 1, n_ + 1);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) t2(i, j) = t1(i, j);
            t2(i, n_) = t1(i, n_ + m_);
        }
        for (std::size_t j = 0; j < n_; ++j) t2(m_, j) = -cost_[j];
        t2(m_, n_) = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis[i] >= n_) continue;
            double cb = cost_[basis[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) t2(m_, j) += cb * t2(i, j);
        }
        if (!pivot_loop(t2, basis, n_)) return LpStatus::unbounded;

        x_out.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis[i] < n_) x_out[basis[i]] = t2(i, n_);
        return LpStatus::optimal;
    }

  private:
    static void pivot(Mat& t, std::size_t prow, std::size_t pcol, std::size_t ncols) {
        double pv = t(prow, pcol);
        for (std::size_t j = 0; j <= ncols; ++j) t(prow, j) /= pv;
        for (std::size_t i = 0; i < t.rows; ++i) {
            if (i == prow) continue;
            double f = t(i, pcol);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= ncols; ++j) t(i, j) -= f * t(prow, j);
        }
    }

    // Maximizes the bottom row's objective (row holds z_j - c_j form with rhs in
    // last column). Bland's rule: lowest eligible index enters and leaves.
    static bool pivot_loop(Mat& t, std::vector<std::size_t>& basis, std::size_t ncols) {
        const std::size_t m = t.rows - 1;
        for (;;) {
            std::size_t enter = ncols;
            for (std::size_t j = 0; j < ncols; ++j)
                if (t(m, j) > LP_TOL) {
                    enter = j;
                    break;
                }
            if (enter == ncols) return true;  // optimal
            std::size_t leave = m;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (t(i, enter) <= LP_TOL) continue;
                double ratio = t(i, ncols) / t(i, enter);
                if (ratio < best - LP_TOL || (ratio < best + LP_TOL &&
                                              (leave == m || basis[i] < basis[leave]))) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave == m) return false;  // unbounded
            pivot(t, leave, enter, ncols);
            basis[leave] = enter;
        }
    }

    std::size_t m_, n_;
    Mat t_;
    Vec cost_;
};

}  // namespace detail

// Dense simplex with Bland's rule. Free variables are split, finite lower
// bounds shifted away, and finite upper bounds added as rows.
inline LpResult lp_solve(const LpProblem& p) {
    const std::size_t n = p.c.size();
    const std::size_t m = p.A.rows;
    if (m > 0 && p.A.cols != n) throw DimensionError("lp_solve: A/c dimension mismatch");
    check_dim(p.b, m, "lp_solve b");
    check_dim(p.lo, n, "lp_solve lo");
    check_dim(p.hi, n, "lp_solve hi");

    // Variable mapping: x_j = lo_j + z_j (finite lo), x_j = z_j' - z_j'' (free),
    // x_j = hi_j - z_j (lo = -inf, finite hi).
    enum class Kind { shifted, flipped, split };
    struct VarMap {
        Kind kind;
        std::size_t z0, z1;
    };
    std::vector<VarMap> vmap(n);
    std::size_t nz = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (p.lo[j] > p.hi[j]) return {LpStatus::infeasible, {}, 0.0};
        if (std::isfinite(p.lo[j])) {
            vmap[j] = {Kind::shifted, nz++, 0};
        } else if (std::isfinite(p.hi[j])) {
            vmap[j] = {Kind::flipped, nz++, 0};
        } else {
            vmap[j] = {Kind::split, nz, nz + 1};
            nz += 2;
        }
    }

    // Count rows: A rows + finite-upper-bound rows for shifted vars.
    std::size_t extra = 0;
    for (std::size_t j = 0; j < n; ++j)
        if (vmap[j].kind == Kind::shifted && std::isfinite(p.hi[j])) ++extra;

    // Inequalities -> equalities with one slack per row.
    const std::size_t mrows = m + extra;
    Mat M(mrows, nz + mrows);
    Vec d(mrows, 0.0), cz(nz + mrows, 0.0);
    double cshift = 0.0;

    auto put = [&](std::size_t row, std::size_t j, double coef) {
        const VarMap& vm = vmap[j];
        switch (vm.kind) {
            case Kind::shifted: M(row, vm.z0) += coef; d[row] -= coef * p.lo[j]; break;
            case Kind::flipped: M(row, vm.z0) -= coef; d[row] -= coef * p.hi[j]; break;
            case Kind::split: M(row, vm.z0) += coef; M(row, vm.z1) -= coef; break;
        }
    };

    for (std::size_t i = 0; i < m; ++i) {
        d[i] = p.b[i];
        for (std::size_t j = 0; j < n; ++j)
            if (p.A(i, j) != 0.0) put(i, j, p.A(i, j));
        M(i, nz + i) = 1.0;  // slack
    }
    std::size_t row = m;
    for (std::size_t j = 0; j < n; ++j) {
        if (vmap[j].kind == Kind::shifted && std::isfinite(p.hi[j])) {
            d[row] = p.hi[j] - p.lo[j];
            M(row, vmap[j].z0) = 1.0;
            M(row, nz + row) = 1.0;
            ++row;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        const VarMap& vm = vmap[j];
        switch (vm.kind) {
            case Kind::shifted: cz[vm.z0] += p.c[j]; cshift += p.c[j] * p.lo[j]; break;
            case Kind::flipped: cz[vm.z0] -= p.c[j]; cshift += p.c[j] * p.hi[j]; break;
            case Kind::split: cz[vm.z0] += p.c[j]; cz[vm.z1] -= p.c[j]; break;
        }
    }

    detail::SimplexTableau tab(M, d, cz);
    Vec z;
    LpStatus st = tab.run(z);
    if (st != LpStatus::optimal) return {st, {}, 0.0};

    Vec x(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const VarMap& vm = vmap[j];
        switch (vm.kind) {
            case Kind::shifted: x[j] = p.lo[j] + z[vm.z0]; break;
            case Kind::flipped: x[j] = p.hi[j] - z[vm.z0]; break;
            case Kind::split: x[j] = z[vm.z0] - z[vm.z1]; break;
        }
    }
    return {LpStatus::optimal, x, dot(p.c, x)};
}

}  // namespace nsopt
