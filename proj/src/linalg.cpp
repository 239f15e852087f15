#include "forcedmech/linalg.hpp"

#include "forcedmech/errors.hpp"

#include <cmath>

namespace fm {

Matrix zero_matrix(std::size_t rows, std::size_t cols) {
    return Matrix(rows, std::vector<Expr>(cols, Expr()));
}

Matrix identity_matrix(std::size_t n) {
    Matrix m = zero_matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) m[i][i] = Expr::integer(1);
    return m;
}

namespace {
Matrix minor_of(const Matrix& m, std::size_t row, std::size_t col) {
    std::size_t n = m.size();
    Matrix out;
    out.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == row) continue;
        std::vector<Expr> r;
        r.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == col) continue;
            r.push_back(m[i][j]);
        }
        out.push_back(std::move(r));
    }
    return out;
}
} // namespace

Expr determinant(const Matrix& m) {
    std::size_t n = m.size();
    if (n == 0) return Expr::integer(1);
    for (const auto& row : m)
        if (row.size() != n) throw PreconditionError("determinant of a non-square matrix");
    if (n == 1) return simplify(m[0][0]);
    if (n == 2) return simplify(m[0][0] * m[1][1] - m[0][1] * m[1][0]);
    std::vector<Expr> terms;
    for (std::size_t j = 0; j < n; ++j) {
        if (m[0][j].is_zero_constant()) continue;
        Expr cof = determinant(minor_of(m, 0, j));
        Expr term = m[0][j] * cof;
        terms.push_back(j % 2 == 0 ? term : -term);
    }
    return simplify(add(std::move(terms)));
}

Matrix symbolic_inverse(const Matrix& m, std::uint64_t seed) {
    std::size_t n = m.size();
    Expr det = determinant(m);
    if (zero_verdict(det, seed) != Verdict::False)
        throw PreconditionError("matrix is singular (determinant vanishes identically): det = " + det.to_string());
    Matrix inv = zero_matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Expr cof = determinant(minor_of(m, j, i)); // adjugate transposes
            Expr signc = ((i + j) % 2 == 0) ? cof : simplify(-cof);
            inv[i][j] = simplify(signc / det);
        }
    }
    return inv;
}

std::vector<Expr> mat_vec(const Matrix& m, const std::vector<Expr>& v) {
    std::vector<Expr> out;
    out.reserve(m.size());
    for (const auto& row : m) {
        if (row.size() != v.size()) throw PreconditionError("mat_vec dimension mismatch");
        std::vector<Expr> terms;
        for (std::size_t j = 0; j < v.size(); ++j) terms.push_back(row[j] * v[j]);
        out.push_back(simplify(add(std::move(terms))));
    }
    return out;
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
    std::size_t n = a.size(), k = b.size(), c = k ? b[0].size() : 0;
    Matrix out = zero_matrix(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].size() != k) throw PreconditionError("mat_mul dimension mismatch");
        for (std::size_t j = 0; j < c; ++j) {
            std::vector<Expr> terms;
            for (std::size_t l = 0; l < k; ++l) terms.push_back(a[i][l] * b[l][j]);
            out[i][j] = simplify(add(std::move(terms)));
        }
    }
    return out;
}

std::vector<double> solve_linear(std::vector<std::vector<double>> m, std::vector<double> rhs) {
    std::size_t n = m.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-14) throw EvalError("numerically singular linear system");
        std::swap(m[piv], m[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            if (f == 0) continue;
            for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
    return x;
}

std::vector<std::vector<Rational>> rational_nullspace(std::vector<std::vector<Rational>> m, std::size_t cols) {
    std::size_t rows = m.size();
    std::vector<std::size_t> pivot_col;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t piv = rank;
        while (piv < rows && m[piv][col] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(m[piv], m[rank]);
        Rational d = m[rank][col];
        for (std::size_t c = 0; c < cols; ++c) m[rank][c] /= d;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank || m[r][col] == 0) continue;
            Rational f = m[r][col];
            for (std::size_t c = 0; c < cols; ++c) m[r][c] -= f * m[rank][c];
        }
        pivot_col.push_back(col);
        ++rank;
    }
    std::vector<bool> is_pivot(cols, false);
    for (std::size_t c : pivot_col) is_pivot[c] = true;
    std::vector<std::vector<Rational>> basis;
    for (std::size_t free_c = 0; free_c < cols; ++free_c) {
        if (is_pivot[free_c]) continue;
        std::vector<Rational> v(cols, Rational(0));
        v[free_c] = 1;
        for (std::size_t r = 0; r < rank; ++r) v[pivot_col[r]] = -m[r][free_c];
        basis.push_back(std::move(v));
    }
    return basis;
}

std::size_t rational_rank(std::vector<std::vector<Rational>> m, std::size_t cols) {
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < m.size(); ++col) {
        std::size_t piv = rank;
        while (piv < m.size() && m[piv][col] == 0) ++piv;
        if (piv == m.size()) continue;
        std::swap(m[piv], m[rank]);
        Rational d = m[rank][col];
        for (std::size_t c = 0; c < cols; ++c) m[rank][c] /= d;
        for (std::size_t r = 0; r < m.size(); ++r) {
            if (r == rank || m[r][col] == 0) continue;
            Rational f = m[r][col];
            for (std::size_t c = 0; c < cols; ++c) m[r][c] -= f * m[rank][c];
        }
        ++rank;
    }
    return rank;
}

Rational rationalize(double x) {
    if (!std::isfinite(x)) throw IndeterminateError("cannot rationalize a non-finite value");
    double y = x;
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    bool have = false;
    for (int it = 0; it < 64; ++it) {
        double fa = std::floor(y);
        if (std::abs(fa) > 9e15) break;
        long long a = static_cast<long long>(fa);
        long long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > 1000000 || q2 < 0) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        have = true;
        if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <=
            1e-9 * std::max(1.0, std::abs(x)))
            break;
        double frac = y - fa;
        if (frac < 1e-12) break;
        y = 1.0 / frac;
    }
    if (!have || q1 == 0 ||
        std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) >
            1e-9 * std::max(1.0, std::abs(x)))
        throw IndeterminateError("no small rational approximates the sampled value");
    return Rational(p1) / Rational(q1);
}

std::vector<std::vector<double>> numeric_nullspace(std::vector<std::vector<double>> m, std::size_t cols,
                                                   double rel_tol) {
    double scale = 0;
    for (const auto& row : m)
        for (double v : row) scale = std::max(scale, std::abs(v));
    const double tol = std::max(rel_tol * scale, 1e-300);

    std::size_t rows = m.size(), rank = 0;
    std::vector<std::size_t> pivot_col;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t piv = rank;
        for (std::size_t r = rank + 1; r < rows; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) <= tol) continue;
        std::swap(m[piv], m[rank]);
        double d = m[rank][col];
        for (std::size_t c = 0; c < cols; ++c) m[rank][c] /= d;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank) continue;
            double f = m[r][col];
            if (f == 0) continue;
            for (std::size_t c = 0; c < cols; ++c) m[r][c] -= f * m[rank][c];
        }
        pivot_col.push_back(col);
        ++rank;
    }
    std::vector<bool> is_pivot(cols, false);
    for (std::size_t c : pivot_col) is_pivot[c] = true;
    std::vector<std::vector<double>> basis;
    for (std::size_t free_c = 0; free_c < cols; ++free_c) {
        if (is_pivot[free_c]) continue;
        std::vector<double> v(cols, 0.0);
        v[free_c] = 1.0;
        for (std::size_t r = 0; r < rank; ++r) v[pivot_col[r]] = -m[r][free_c];
        basis.push_back(std::move(v));
    }
    return basis;
}

} // namespace fm
