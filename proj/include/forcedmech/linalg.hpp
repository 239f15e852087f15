#pragma once

#include "expr.hpp"

#include <vector>

namespace fm {

using Matrix = std::vector<std::vector<Expr>>;

Matrix zero_matrix(std::size_t rows, std::size_t cols);
Matrix identity_matrix(std::size_t n);

// Exact symbolic determinant by cofactor expansion (intended for small n).
Expr determinant(const Matrix& m);

// Adjugate-based symbolic inverse: inv = adj(m) / det. Throws PreconditionError
// when det is identically zero (probabilistic test with the given seed).
Matrix symbolic_inverse(const Matrix& m, std::uint64_t seed = 0);

std::vector<Expr> mat_vec(const Matrix& m, const std::vector<Expr>& v);
Matrix mat_mul(const Matrix& a, const Matrix& b);

// Solve m x = rhs numerically (partial pivoting). Throws EvalError on a
// numerically singular matrix.
std::vector<double> solve_linear(std::vector<std::vector<double>> m, std::vector<double> rhs);

// Exact rational nullspace basis of an r x c matrix, echelon-normalized so the
// result is deterministic: each basis vector has a 1 in its free column and 0
// in the other free columns.
std::vector<std::vector<Rational>> rational_nullspace(std::vector<std::vector<Rational>> m, std::size_t cols);

std::size_t rational_rank(std::vector<std::vector<Rational>> m, std::size_t cols);

// Nearest small rational (continued fractions, denominators up to 1e6).
// Throws IndeterminateError when x is non-finite or no convergent lands
// within relative 1e-9.
Rational rationalize(double x);

// Echelon-normalized nullspace basis with pivots decided at a relative
// tolerance, mirroring rational_nullspace.
std::vector<std::vector<double>> numeric_nullspace(std::vector<std::vector<double>> m, std::size_t cols,
                                                   double rel_tol);

} // namespace fm
