// SPDX-License-Identifier: Apache-2.0
#include "linattn/matrix.hpp"

#include <algorithm>

#include "linattn/error.hpp"

namespace linattn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::span<const double> values)
    : rows_(rows), cols_(cols), data_(values.begin(), values.end()) {
  if (values.size() != rows * cols) {
    throw ShapeError("Matrix: " + std::to_string(values.size()) +
                     " values do not fill a " + shape_string() + " matrix");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer rows");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), values);
}

Matrix Matrix::column_vector(std::span<const double> values) {
  return Matrix(values.size(), 1, values);
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

}  // namespace linattn
