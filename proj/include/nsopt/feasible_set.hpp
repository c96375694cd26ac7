#pragma once

#include <algorithm>
#include <limits>
#include <numeric>

#include "nsopt/lp.hpp"
#include "nsopt/vector_ops.hpp"

namespace nsopt {

struct FeasibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnboundedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RankError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// sup{ lambda >= 0 | x + lambda d in set }, with infinity tagged explicitly.
struct MaxStep {
    bool finite = true;
    double value = 0.0;

    static MaxStep infinite() { return {false, 0.0}; }
    static MaxStep of(double v) { return {true, v}; }
    double clipped(double cap) const { return finite ? std::min(value, cap) : cap; }
};

// Euclidean projection onto the probability simplex {x >= 0, sum x = s}
// by the sort-and-threshold rule.
inline Vec project_simplex(const Vec& y, double s = 1.0) {
    const std::size_t n = y.size();
    Vec u = y;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < n; ++i) {
        css += u[i];
        double t = (css - s) / double(i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            theta = t;
        }
    }
    (void)rho;
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::max(y[i] - theta, 0.0);
    return x;
}

// Orthogonal projector onto {x | N x = 0}: P = I - N^T (N N^T)^{-1} N.
// N must have full row rank (pivot tolerance `tol`).
inline Mat equality_projector(const Mat& N, double tol = 1e-10) {
    const std::size_t m = N.rows, n = N.cols;
    if (m == 0) return Mat::identity(n);
    Mat G(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) G(i, j) = dot(N.row(i), N.row(j));
    // Solve G Y = N column-wise; singular G means rank-deficient N.
    Mat Y(m, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vec col(m);
        for (std::size_t i = 0; i < m; ++i) col[i] = N(i, j);
        Vec y;
        try {
            y = solve_dense(G, col, tol);
        } catch (const std::runtime_error&) {
            throw RankError("equality_projector: N is rank-deficient");
        }
        for (std::size_t i = 0; i < m; ++i) Y(i, j) = y[i];
    }
    Mat P = Mat::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += N(k, i) * Y(k, j);
            P(i, j) -= s;
        }
    return P;
}

namespace detail {

// Projection onto {x | A x <= b} by a primal active-set QP. Exact up to
// linear algebra for the desk-scale instances this library targets.
inline Vec project_polytope(const Mat& A, const Vec& b, const Vec& y, double tol = 1e-10) {
    const std::size_t m = A.rows, n = A.cols;

    // Feasible start via phase-1 of the simplex.
    LpProblem feas;
    feas.A = A;
    feas.b = b;
    feas.c = Vec(n, 0.0);
    feas.lo = Vec(n, -std::numeric_limits<double>::infinity());
    feas.hi = Vec(n, std::numeric_limits<double>::infinity());
    LpResult r = lp_solve(feas);
    if (r.status != LpStatus::optimal)
        throw FeasibilityError("project: polytope is empty (phase-1 LP infeasible)");
    Vec x = r.x;

    std::vector<std::size_t> W;  // working set of active rows
    auto eqp = [&](const std::vector<std::size_t>& ws, Vec& z, Vec& lam) -> bool {
        // min 1/2 ||z-y||^2 s.t. a_i z = b_i (i in ws):  z = y - A_W^T lam,
        // (A_W A_W^T) lam = A_W y - b_W.
        const std::size_t k = ws.size();
        if (k == 0) {
            z = y;
            lam.clear();
            return true;
        }
        Mat G(k, k);
        Vec rhs(k);
        for (std::size_t i = 0; i < k; ++i) {
            Vec ai = A.row(ws[i]);
            for (std::size_t j = 0; j < k; ++j) G(i, j) = dot(ai, A.row(ws[j]));
            rhs[i] = dot(ai, y) - b[ws[i]];
        }
        try {
            lam = solve_dense(G, rhs, tol);
        } catch (const std::runtime_error&) {
            return false;  // dependent working set
        }
        z = y;
        for (std::size_t i = 0; i < k; ++i) axpy(-lam[i], A.row(ws[i]), z);
        return true;
    };

    for (std::size_t iter = 0; iter < 100 * (m + n + 1); ++iter) {
        Vec z, lam;
        if (!eqp(W, z, lam)) {
            W.pop_back();  // drop the row that made the set dependent
            continue;
        }
        Vec step = sub(z, x);
        if (norm2(step) <= tol * (1.0 + norm2(x))) {
            // KKT: all multipliers nonnegative?
            std::size_t drop = W.size();
            double most_neg = -tol;
            for (std::size_t i = 0; i < W.size(); ++i)
                if (lam[i] < most_neg) {
                    most_neg = lam[i];
                    drop = i;
                }
            if (drop == W.size()) return z;
            W.erase(W.begin() + std::ptrdiff_t(drop));
            continue;
        }
        // Longest feasible step toward z.
        double t = 1.0;
        std::size_t block = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (std::find(W.begin(), W.end(), i) != W.end()) continue;
            double ad = dot(A.row(i), step);
            if (ad <= tol) continue;
            double ti = (b[i] - dot(A.row(i), x)) / ad;
            if (ti < t) {
                t = ti;
                block = i;
            }
        }
        axpy(std::max(t, 0.0), step, x);
        if (block < m)
            W.push_back(block);
        else if (t >= 1.0)
            x = z;
    }
    throw std::runtime_error("project: active-set iteration cap exceeded");
}

}  // namespace detail

// Membership, projection, linear minimization, and maximal feasible step for
// the set shapes the solvers use.
class FeasibleSet {
  public:
    enum class Kind { whole_space, box, ball, simplex, polytope, equality_manifold };

    static FeasibleSet whole_space(std::size_t dim) {
        FeasibleSet s;
        s.kind_ = Kind::whole_space;
        s.dim_ = dim;
        return s;
    }
    static FeasibleSet box(Vec lo, Vec hi) {
        check_dim(hi, lo.size(), "FeasibleSet::box");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (lo[i] > hi[i]) throw FeasibilityError("box: lo > hi");
        FeasibleSet s;
        s.kind_ = Kind::box;
        s.dim_ = lo.size();
        s.lo_ = std::move(lo);
        s.hi_ = std::move(hi);
        return s;
    }
    static FeasibleSet ball(Vec center, double radius) {
        if (radius <= 0.0) throw FeasibilityError("ball: radius must be positive");
        FeasibleSet s;
        s.kind_ = Kind::ball;
        s.dim_ = center.size();
        s.center_ = std::move(center);
        s.radius_ = radius;
        return s;
    }
    static FeasibleSet simplex(std::size_t dim, double scale = 1.0) {
        if (scale <= 0.0) throw FeasibilityError("simplex: scale must be positive");
        FeasibleSet s;
        s.kind_ = Kind::simplex;
        s.dim_ = dim;
        s.scale_ = scale;
        return s;
    }
    // {x | A x <= b}; bound rows belong in A.
    static FeasibleSet polytope(Mat A, Vec b) {
        check_dim(b, A.rows, "FeasibleSet::polytope");
        FeasibleSet s;
        s.kind_ = Kind::polytope;
        s.dim_ = A.cols;
        s.A_ = std::move(A);
        s.b_ = std::move(b);
        return s;
    }
    static FeasibleSet equality_manifold(Mat N, Vec b) {
        check_dim(b, N.rows, "FeasibleSet::equality_manifold");
        FeasibleSet s;
        s.kind_ = Kind::equality_manifold;
        s.dim_ = N.cols;
        s.A_ = std::move(N);
        s.b_ = std::move(b);
        s.P_ = equality_projector(s.A_);
        return s;
    }

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    const Mat& matrix() const { return A_; }
    const Vec& rhs() const { return b_; }

    bool contains(const Vec& x, double tol = 1e-9) const {
        check_dim(x, dim_, "FeasibleSet::contains");
        switch (kind_) {
            case Kind::whole_space: return true;
            case Kind::box:
                for (std::size_t i = 0; i < dim_; ++i)
                    if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol) return false;
                return true;
            case Kind::ball: return norm2(sub(x, center_)) <= radius_ + tol;
            case Kind::simplex: {
                double s = 0.0;
                for (double v : x) {
                    if (v < -tol) return false;
                    s += v;
                }
                return std::abs(s - scale_) <= tol;
            }
            case Kind::polytope:
                for (std::size_t i = 0; i < A_.rows; ++i)
                    if (dot(A_.row(i), x) > b_[i] + tol) return false;
                return true;
            case Kind::equality_manifold: {
                Vec r = sub(matvec(A_, x), b_);
                return norm_inf(r) <= tol;
            }
        }
        return false;
    }

    // Nearest point of the set in the Euclidean norm.
    Vec project(const Vec& y) const {
        check_dim(y, dim_, "FeasibleSet::project");
        switch (kind_) {
            case Kind::whole_space: return y;
            case Kind::box: {
                Vec x(dim_);
                for (std::size_t i = 0; i < dim_; ++i) x[i] = std::clamp(y[i], lo_[i], hi_[i]);
                return x;
            }
            case Kind::ball: {
                Vec d = sub(y, center_);
                double n = norm2(d);
                if (n <= radius_) return y;
                Vec x = center_;
                axpy(radius_ / n, d, x);
                return x;
            }
            case Kind::simplex: return project_simplex(y, scale_);
            case Kind::polytope: return detail::project_polytope(A_, b_, y);
            case Kind::equality_manifold: {
                // y - N^T (N N^T)^{-1} (N y - b)
                const std::size_t m = A_.rows;
                if (m == 0) return y;
                Mat G(m, m);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j) G(i, j) = dot(A_.row(i), A_.row(j));
                Vec resid = sub(matvec(A_, y), b_);
                Vec lam;
                try {
                    lam = solve_dense(G, resid, 1e-10);
                } catch (const std::runtime_error&) {
                    throw RankError("project: equality manifold matrix is rank-deficient");
                }
                Vec x = y;
                for (std::size_t i = 0; i < m; ++i) axpy(-lam[i], A_.row(i), x);
                return x;
            }
        }
        throw std::logic_error("unreachable");
    }

    // Exact minimizer of <c,x> over the set.
    Vec linmin(const Vec& c) const {
        check_dim(c, dim_, "FeasibleSet::linmin");
        switch (kind_) {
            case Kind::whole_space:
                if (norm2(c) == 0.0) return zeros(dim_);
                throw UnboundedError("linmin: unbounded set with nonzero objective");
            case Kind::box: {
                Vec x(dim_);
                for (std::size_t i = 0; i < dim_; ++i) {
                    if (c[i] > 0.0)
                        x[i] = lo_[i];
                    else if (c[i] < 0.0)
                        x[i] = hi_[i];
                    else
                        x[i] = std::clamp(0.0, lo_[i], hi_[i]);
                    if (!std::isfinite(x[i]))
                        throw UnboundedError("linmin: box unbounded along objective");
                }
                return x;
            }
            case Kind::ball: {
                double n = norm2(c);
                Vec x = center_;
                if (n > 0.0) axpy(-radius_ / n, c, x);
                return x;
            }
            case Kind::simplex: {
                std::size_t j = 0;
                for (std::size_t i = 1; i < dim_; ++i)
                    if (c[i] < c[j]) j = i;  // lowest index on ties
                Vec x = zeros(dim_);
                x[j] = scale_;
                return x;
            }
            case Kind::polytope: {
                LpProblem p;
                p.A = A_;
                p.b = b_;
                p.c = c;
                p.lo = Vec(dim_, -std::numeric_limits<double>::infinity());
                p.hi = Vec(dim_, std::numeric_limits<double>::infinity());
                LpResult r = lp_solve(p);
                if (r.status == LpStatus::unbounded)
                    throw UnboundedError("linmin: polytope unbounded along objective");
                if (r.status == LpStatus::infeasible)
                    throw FeasibilityError("linmin: polytope is empty");
                return r.x;
            }
            case Kind::equality_manifold: {
                Vec pc = matvec(P_, c);
                if (norm2(pc) > 1e-12)
                    throw UnboundedError("linmin: equality manifold unbounded along objective");
                return project(zeros(dim_));
            }
        }
        throw std::logic_error("unreachable");
    }

    // sup{lambda >= 0 | x + lambda d in set}; requires feasible x.
    MaxStep max_step(const Vec& x, const Vec& d, double tol = 1e-9) const {
        check_dim(x, dim_, "FeasibleSet::max_step x");
        check_dim(d, dim_, "FeasibleSet::max_step d");
        if (!contains(x, tol)) throw FeasibilityError("max_step: x is not feasible");
        double lam = std::numeric_limits<double>::infinity();
        switch (kind_) {
            case Kind::whole_space: break;
            case Kind::box:
                for (std::size_t i = 0; i < dim_; ++i) {
                    if (d[i] > tol && std::isfinite(hi_[i]))
                        lam = std::min(lam, (hi_[i] - x[i]) / d[i]);
                    else if (d[i] < -tol && std::isfinite(lo_[i]))
                        lam = std::min(lam, (lo_[i] - x[i]) / d[i]);
                }
                break;
            case Kind::ball: {
                double a = norm2_sq(d);
                if (a <= tol * tol) break;
                Vec xc = sub(x, center_);
                double bq = dot(xc, d);
                double cq = norm2_sq(xc) - radius_ * radius_;
                double disc = bq * bq - a * cq;
                lam = (-bq + std::sqrt(std::max(disc, 0.0))) / a;
                break;
            }
            case Kind::simplex: {
                double sd = std::accumulate(d.begin(), d.end(), 0.0);
                if (std::abs(sd) > tol) return MaxStep::of(0.0);
                for (std::size_t i = 0; i < dim_; ++i)
                    if (d[i] < -tol) lam = std::min(lam, -x[i] / d[i]);
                break;
            }
            case Kind::polytope:
                for (std::size_t i = 0; i < A_.rows; ++i) {
                    double ad = dot(A_.row(i), d);
                    if (ad > tol) lam = std::min(lam, (b_[i] - dot(A_.row(i), x)) / ad);
                }
                break;
            case Kind::equality_manifold: {
                Vec nd = matvec(A_, d);
                if (norm_inf(nd) > tol) return MaxStep::of(0.0);
                break;
            }
        }
        if (!std::isfinite(lam)) return MaxStep::infinite();
        return MaxStep::of(std::max(lam, 0.0));
    }

    const Vec& box_lo() const { return lo_; }
    const Vec& box_hi() const { return hi_; }

  private:
    Kind kind_ = Kind::whole_space;
    std::size_t dim_ = 0;
    Vec lo_, hi_;          // box
    Vec center_;           // ball
    double radius_ = 0.0;  // ball
    double scale_ = 1.0;   // simplex
    Mat A_;                // polytope rows / manifold N
    Vec b_;
    Mat P_;  // cached null-space projector for the manifold
};

}  // namespace nsopt
