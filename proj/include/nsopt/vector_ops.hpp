#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsopt {

using Vec = std::vector<double>;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void check_dim(const Vec& v, std::size_t n, const char* where) {
    if (v.size() != n)
        throw DimensionError(std::string(where) + ": expected dimension " +
                             std::to_string(n) + ", got " + std::to_string(v.size()));
}

inline double dot(const Vec& a, const Vec& b) {
    check_dim(b, a.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_sq(const Vec& a) { return dot(a, a); }
inline double norm2(const Vec& a) { return std::sqrt(norm2_sq(a)); }

inline double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

// y += c * x
inline void axpy(double c, const Vec& x, Vec& y) {
    check_dim(y, x.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline void scale(Vec& x, double c) {
    for (double& v : x) v *= c;
}

inline Vec scaled(const Vec& x, double c) {
    Vec y = x;
    scale(y, c);
    return y;
}

inline Vec add(const Vec& a, const Vec& b) {
    check_dim(b, a.size(), "add");
    Vec c = a;
    axpy(1.0, b, c);
    return c;
}

inline Vec sub(const Vec& a, const Vec& b) {
    check_dim(b, a.size(), "sub");
    Vec c = a;
    axpy(-1.0, b, c);
    return c;
}

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

inline Vec unit(std::size_t n, std::size_t i) {
    Vec e(n, 0.0);
    e.at(i) = 1.0;
    return e;
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Dense row-major matrix, desk-scale only.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Vec row(std::size_t i) const {
        Vec r(cols);
        for (std::size_t j = 0; j < cols; ++j) r[j] = (*this)(i, j);
        return r;
    }
};

inline Vec matvec(const Mat& m, const Vec& x) {
    check_dim(x, m.cols, "matvec");
    Vec y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline Vec matvec_t(const Mat& m, const Vec& x) {
    check_dim(x, m.rows, "matvec_t");
    Vec y(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += m(i, j) * x[i];
    return y;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw DimensionError("matmul: inner dimensions differ");
    Mat c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double v = a(i, k);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += v * b(k, j);
        }
    return c;
}

// Solve A x = b by Gaussian elimination with partial pivoting.
// Throws on (numerically) singular A.
inline Vec solve_dense(Mat A, Vec b, double tol = 1e-12) {
    if (A.rows != A.cols) throw DimensionError("solve_dense: matrix not square");
    check_dim(b, A.rows, "solve_dense");
    const std::size_t n = A.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A(r, col)) > std::abs(A(piv, col))) piv = r;
        if (std::abs(A(piv, col)) <= tol)
            throw std::runtime_error("solve_dense: singular matrix");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(piv, j), A(col, j));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = A(r, col) / A(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) A(r, j) -= f * A(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

}  // namespace nsopt
