#pragma once

#include <algorithm>

#include "nsopt/vector_ops.hpp"

namespace nsopt {

// Minimum-norm element of the convex hull of `points` (Wolfe's active-set
// iteration). Iteration cap 10 * |points|; `tol` bounds the duality gap
// <x, p_min> >= ||x||^2 - tol at exit.
inline Vec min_norm_point(const std::vector<Vec>& points, double tol = 1e-10) {
    if (points.empty()) throw std::invalid_argument("min_norm_point: no points");
    const std::size_t n = points[0].size();
    for (const Vec& p : points) check_dim(p, n, "min_norm_point");

    // Start from the point of least norm.
    std::size_t start = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (norm2_sq(points[i]) < norm2_sq(points[start])) start = i;

    std::vector<std::size_t> corral{start};
    Vec w{1.0};  // barycentric weights over the corral
    Vec x = points[start];

    // Affine minimizer over corral S: solve [[0 1^T],[1 G]] [mu; v] = [1; 0].
    auto affine_minimizer = [&](const std::vector<std::size_t>& S, Vec& v) -> bool {
        const std::size_t k = S.size();
        Mat M(k + 1, k + 1);
        Vec rhs(k + 1, 0.0);
        rhs[0] = 1.0;
        for (std::size_t i = 0; i < k; ++i) {
            M(0, i + 1) = 1.0;
            M(i + 1, 0) = 1.0;
            for (std::size_t j = 0; j < k; ++j)
                M(i + 1, j + 1) = dot(points[S[i]], points[S[j]]);
        }
        Vec sol;
        try {
            sol = solve_dense(M, rhs, 1e-14);
        } catch (const std::runtime_error&) {
            return false;
        }
        v.assign(sol.begin() + 1, sol.end());
        return true;
    };

    const std::size_t max_iter = 10 * points.size() + 10;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // Most opposed point to the current x.
        std::size_t best = 0;
        double best_ip = dot(x, points[0]);
        for (std::size_t i = 1; i < points.size(); ++i) {
            double ip = dot(x, points[i]);
            if (ip < best_ip) {
                best_ip = ip;
                best = i;
            }
        }
        if (best_ip >= norm2_sq(x) - tol) break;  // optimality certificate
        if (std::find(corral.begin(), corral.end(), best) == corral.end()) {
            corral.push_back(best);
            w.push_back(0.0);
        }

        // Minor cycle: pull x to the affine minimizer, dropping points whose
        // weight would go negative.
        for (std::size_t minor = 0; minor <= points.size() + 1; ++minor) {
            Vec v;
            if (!affine_minimizer(corral, v)) {
                // Degenerate corral: drop the smallest-weight member.
                std::size_t drop =
                    std::size_t(std::min_element(w.begin(), w.end()) - w.begin());
                corral.erase(corral.begin() + std::ptrdiff_t(drop));
                w.erase(w.begin() + std::ptrdiff_t(drop));
                continue;
            }
            bool interior = true;
            for (double vi : v)
                if (vi <= 1e-12) interior = false;
            if (interior) {
                w = v;
                break;
            }
            // Largest step toward v keeping weights nonnegative.
            double theta = 1.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                if (v[i] < 1e-12 && w[i] - v[i] > 1e-15)
                    theta = std::min(theta, w[i] / (w[i] - v[i]));
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = (1.0 - theta) * w[i] + theta * v[i];
            for (std::size_t i = w.size(); i-- > 0;) {
                if (w[i] <= 1e-12) {
                    corral.erase(corral.begin() + std::ptrdiff_t(i));
                    w.erase(w.begin() + std::ptrdiff_t(i));
                }
            }
        }
        x = zeros(n);
        for (std::size_t i = 0; i < corral.size(); ++i) axpy(w[i], points[corral[i]], x);
    }
    return x;
}

}  // namespace nsopt
