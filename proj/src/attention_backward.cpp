// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <string>

#include "linattn/attention.hpp"
#include "linattn/error.hpp"
#include "linattn/linalg.hpp"

namespace linattn {
namespace {

// Back-propagates through S = softmax_columns(Z): for each column j,
// dZ(:, j) = S(:, j) .* (dS(:, j) - <S(:, j), dS(:, j)>).
Matrix softmax_columns_backward(const Matrix& s, const Matrix& ds) {
  Matrix dz(s.rows(), s.cols());
  for (std::size_t j = 0; j < s.cols(); ++j) {
    double inner = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) inner += s(i, j) * ds(i, j);
    for (std::size_t i = 0; i < s.rows(); ++i) dz(i, j) = s(i, j) * (ds(i, j) - inner);
  }
  return dz;
}

}  // namespace

Gradients factorized_attention_backward(const AttentionInput& inp, const AttentionParams& p,
                                        const ProjectionPair& proj, const Matrix& upstream) {
  if (upstream.rows() != inp.n || upstream.cols() != p.d_k) {
    throw ShapeError("factorized_attention_backward: upstream is " + upstream.shape_string() +
                     ", expected " + std::to_string(inp.n) + "x" + std::to_string(p.d_k));
  }
  const auto [out, t] = factorized_attention(inp, p, proj, Order::right);
  const double s = 1.0 / std::sqrt(static_cast<double>(p.d_k));

  // out = H L X
  const Matrix lx = matmul(t.L, t.X);
  const Matrix dH = matmul(upstream, transpose(lx));
  const Matrix ht_g = matmul(transpose(t.H), upstream);
  const Matrix dL = matmul(ht_g, transpose(t.X));
  const Matrix dX = matmul(transpose(t.L), ht_g);

  Gradients g;

  // H = softmax_columns(Q Wq s)
  const Matrix dQw = scale(softmax_columns_backward(t.H, dH), s);
  g.dWq = matmul(transpose(inp.Q), dQw);
  g.dQ = matmul(dQw, transpose(p.Wq));

  // L = softmax_columns((E K Wk)^T s)
  const Matrix dEKw = scale(transpose(softmax_columns_backward(t.L, dL)), s);
  const Matrix dKw = matmul(transpose(proj.E), dEKw);
  g.dWk = matmul(transpose(inp.K), dKw);
  g.dK = matmul(dKw, transpose(p.Wk));

  // X = F V Wv
  const Matrix dVw = matmul(transpose(proj.F), dX);
  g.dWv = matmul(transpose(inp.V), dVw);
  g.dV = matmul(dVw, transpose(p.Wv));
  return g;
}

}  // namespace linattn
