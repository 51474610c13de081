// SPDX-License-Identifier: Apache-2.0
#include "linattn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "linattn/error.hpp"

namespace linattn {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  const std::size_t m = a.rows();
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  Matrix c(m, n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    const double* arow = pa + i * inner;
    for (std::size_t p = 0; p < inner; ++p) {
      const double aip = arow[p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto src = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto src = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

Matrix exp_elementwise(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double e = std::exp(a(i, j));
      if (!std::isfinite(e)) {
        throw NumericalError("exp_elementwise: overflow at (" + std::to_string(i) + ", " +
                             std::to_string(j) + ")");
      }
      out(i, j) = e;
    }
  }
  return out;
}

Matrix softmax_columns(const Matrix& a) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  Matrix out(rows, cols);
  std::vector<double> col_max(cols, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) col_max[j] = std::max(col_max[j], a(i, j));

  std::vector<double> col_sum(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = std::exp(a(i, j) - col_max[j]);
      out(i, j) = e;
      col_sum[j] += e;
    }
  }
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) /= col_sum[j];
  return out;
}

Matrix softmax_rows(const Matrix& a) {
  const std::size_t cols = a.cols();
  Matrix out(a.rows(), cols);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto in = a.row(i);
    auto dst = out.row(i);
    const double m = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      dst[j] = std::exp(in[j] - m);
      sum += dst[j];
    }
    for (double& v : dst) v /= sum;
  }
  return out;
}

std::vector<double> column_sums(const Matrix& a) {
  std::vector<double> sums(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) sums[j] += a(i, j);
  return sums;
}

std::vector<double> row_sums(const Matrix& a) {
  std::vector<double> sums(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (double v : a.row(i)) sums[i] += v;
  return sums;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double l2_norm(const Matrix& v) {
  if (v.rows() != 1 && v.cols() != 1) {
    throw ShapeError("l2_norm: expected a row or column vector, got " + v.shape_string());
  }
  return frobenius_norm(v);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double relative_frobenius_gap(const Matrix& a, const Matrix& b) {
  const double diff = frobenius_norm(subtract(a, b));
  const double ref = frobenius_norm(a);
  return ref > 0.0 ? diff / ref : diff;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double variance, RngStream& rng) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw DomainError("gaussian_matrix: variance must be positive and finite");
  }
  const double sd = std::sqrt(variance);
  Matrix out(rows, cols);
  for (double& v : out.data()) v = sd * rng.normal();
  return out;
}

std::vector<double> singular_values(const Matrix& a) {
  // Work on the orientation with fewer columns, stored column-major so each
  // column is contiguous.
  const bool wide = a.cols() > a.rows();
  const std::size_t m = wide ? a.cols() : a.rows();
  const std::size_t p = wide ? a.rows() : a.cols();
  std::vector<double> w(m * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < m; ++i) w[j * m + i] = wide ? a(j, i) : a(i, j);

  auto column = [&](std::size_t j) { return w.data() + j * m; };
  auto dot = [m](const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += x[i] * y[i];
    return s;
  };

  std::vector<double> norms2(p);
  for (std::size_t j = 0; j < p; ++j) norms2[j] = dot(column(j), column(j));

  bool converged = p < 2;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        double* ci = column(i);
        double* cj = column(j);
        const double alpha = norms2[i];
        const double beta = norms2[j];
        if (alpha == 0.0 || beta == 0.0) continue;
        const double gamma = dot(ci, cj);
        if (std::abs(gamma) <= kJacobiTolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < m; ++r) {
          const double xi = ci[r];
          const double xj = cj[r];
          ci[r] = c * xi - s * xj;
          cj[r] = s * xi + c * xj;
        }
        norms2[i] = dot(ci, ci);
        norms2[j] = dot(cj, cj);
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalError("singular_values: Jacobi iteration did not converge within " +
                         std::to_string(kJacobiMaxSweeps) + " sweeps");
  }

  std::vector<double> sigma(p);
  for (std::size_t j = 0; j < p; ++j) sigma[j] = std::sqrt(norms2[j]);
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

}  // namespace linattn
