// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "linattn/matrix.hpp"
#include "linattn/rng.hpp"

namespace linattn {

/// Cap on one-sided Jacobi sweeps before singular_values gives up.
inline constexpr int kJacobiMaxSweeps = 100;
/// Pairs with |<a_i, a_j>| <= kJacobiTolerance * |a_i| |a_j| are left alone.
inline constexpr double kJacobiTolerance = 1e-14;

/// Plain i-k-j product with a fixed accumulation order. Every attention
/// evaluator in this library goes through this kernel.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix scale(const Matrix& a, double s);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);

/// Element-wise e^x. Throws NumericalError naming the first entry whose
/// exponential is not finite.
Matrix exp_elementwise(const Matrix& a);

/// Normalizes exp(a) so that every column sums to one. The column maximum is
/// subtracted first; softmax is invariant to that shift.
Matrix softmax_columns(const Matrix& a);
/// Row-wise counterpart of softmax_columns.
Matrix softmax_rows(const Matrix& a);

std::vector<double> column_sums(const Matrix& a);
std::vector<double> row_sums(const Matrix& a);

double frobenius_norm(const Matrix& a);
/// Euclidean norm of a row or column vector; ShapeError otherwise.
double l2_norm(const Matrix& v);
double max_abs(const Matrix& a);
/// ||a - b||_F / ||a||_F, or ||a - b||_F when a is zero.
double relative_frobenius_gap(const Matrix& a, const Matrix& b);

/// rows x cols matrix with i.i.d. N(0, variance) entries drawn from rng in
/// row-major order.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double variance, RngStream& rng);

/// All min(rows, cols) singular values in descending order.
///
/// One-sided (Hestenes) Jacobi: columns of the narrower orientation are
/// rotated pairwise until mutually orthogonal, which diagonalizes A^T A
/// without forming it. Small singular values keep absolute accuracy near
/// machine epsilon times ||A||, which the rank checks rely on.
std::vector<double> singular_values(const Matrix& a);

}  // namespace linattn
