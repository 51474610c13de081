// SPDX-License-Identifier: Apache-2.0
#include "linattn/attention.hpp"

#include <cmath>
#include <string>

#include "linattn/error.hpp"
#include "linattn/linalg.hpp"

namespace linattn {
namespace {

void check_compatible(const AttentionInput& inp, const AttentionParams& p) {
  if (inp.Q.cols() != p.d_model) {
    throw ShapeError("attention: inputs are " + inp.Q.shape_string() + " but weights expect d_model=" +
                     std::to_string(p.d_model));
  }
}

double inv_sqrt(std::size_t d) { return 1.0 / std::sqrt(static_cast<double>(d)); }

// Column sums of exp(m), computed directly; these are the diagonal
// normalizers and must stay finite.
std::vector<double> exp_column_sums(const Matrix& m, const char* name) {
  std::vector<double> sums(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) sums[j] += std::exp(m(i, j));
  for (std::size_t j = 0; j < sums.size(); ++j) {
    if (!std::isfinite(sums[j])) {
      throw NumericalError(std::string(name) + " normalizer overflows at column " + std::to_string(j));
    }
  }
  return sums;
}

}  // namespace

std::string_view to_string(Order order) { return order == Order::left ? "left" : "right"; }

AttentionParams AttentionParams::from_weights(Matrix wq, Matrix wk, Matrix wv) {
  if (wq.rows() != wk.rows() || wq.rows() != wv.rows() || wq.cols() != wk.cols() ||
      wq.cols() != wv.cols()) {
    throw ShapeError("AttentionParams: weight shapes differ: " + wq.shape_string() + ", " +
                     wk.shape_string() + ", " + wv.shape_string());
  }
  if (wq.rows() == 0 || wq.cols() == 0) throw ShapeError("AttentionParams: empty weights");
  AttentionParams p;
  p.d_model = wq.rows();
  p.d_k = wq.cols();
  p.Wq = std::move(wq);
  p.Wk = std::move(wk);
  p.Wv = std::move(wv);
  return p;
}

AttentionInput AttentionInput::from_matrices(Matrix q, Matrix k, Matrix v) {
  if (q.rows() != k.rows() || q.rows() != v.rows() || q.cols() != k.cols() || q.cols() != v.cols()) {
    throw ShapeError("AttentionInput: Q, K, V shapes differ: " + q.shape_string() + ", " +
                     k.shape_string() + ", " + v.shape_string());
  }
  if (q.rows() == 0 || q.cols() == 0) throw ShapeError("AttentionInput: empty sequence");
  AttentionInput inp;
  inp.n = q.rows();
  inp.Q = std::move(q);
  inp.K = std::move(k);
  inp.V = std::move(v);
  return inp;
}

AttentionInput random_input(std::size_t n, std::size_t d_model, RngStream& rng) {
  Matrix q = gaussian_matrix(n, d_model, 1.0, rng);
  Matrix k = gaussian_matrix(n, d_model, 1.0, rng);
  Matrix v = gaussian_matrix(n, d_model, 1.0, rng);
  return AttentionInput::from_matrices(std::move(q), std::move(k), std::move(v));
}

AttentionParams random_params(std::size_t d_model, std::size_t d_k, RngStream& rng) {
  const double var = 1.0 / static_cast<double>(d_model);
  Matrix wq = gaussian_matrix(d_model, d_k, var, rng);
  Matrix wk = gaussian_matrix(d_model, d_k, var, rng);
  Matrix wv = gaussian_matrix(d_model, d_k, var, rng);
  return AttentionParams::from_weights(std::move(wq), std::move(wk), std::move(wv));
}

Matrix vanilla_context_map(const AttentionInput& inp, const AttentionParams& p) {
  check_compatible(inp, p);
  Matrix scores;
  {
    const Matrix qw = matmul(inp.Q, p.Wq);
    const Matrix kw_t = transpose(matmul(inp.K, p.Wk));
    scores = matmul(qw, kw_t);
  }
  const double s = inv_sqrt(p.d_k);
  for (double& v : scores.data()) v *= s;
  return softmax_rows(scores);
}

Matrix vanilla_attention(const AttentionInput& inp, const AttentionParams& p) {
  // Score buffers are released before V Wv is formed so the n x n pair is the
  // only quadratic term at the high-water mark.
  const Matrix weights = vanilla_context_map(inp, p);
  const Matrix vw = matmul(inp.V, p.Wv);
  return matmul(weights, vw);
}

Matrix scaled_linear_attention(const AttentionInput& inp, const AttentionParams& p, Order order) {
  check_compatible(inp, p);
  const double n = static_cast<double>(inp.n);
  const Matrix qw = matmul(inp.Q, p.Wq);
  const Matrix kw_t = transpose(matmul(inp.K, p.Wk));
  const Matrix vw = matmul(inp.V, p.Wv);
  if (order == Order::left) {
    const Matrix scores = scale(matmul(qw, kw_t), 1.0 / n);
    return matmul(scores, vw);
  }
  const double r = 1.0 / std::sqrt(n);
  const Matrix kv = matmul(scale(kw_t, r), vw);
  return matmul(scale(qw, r), kv);
}

FactorizationTrace context_map(const AttentionInput& inp, const AttentionParams& p) {
  check_compatible(inp, p);
  if (inp.n > kContextMapMaxN) {
    throw DomainError("context_map: n=" + std::to_string(inp.n) + " exceeds the cap of " +
                      std::to_string(kContextMapMaxN));
  }
  const double s = inv_sqrt(p.d_k);
  FactorizationTrace t;
  t.A = scale(matmul(inp.Q, p.Wq), s);
  t.B = scale(transpose(matmul(inp.K, p.Wk)), s);
  t.DA_diag = exp_column_sums(t.A, "D_A");
  t.DB_diag = exp_column_sums(t.B, "D_B");
  t.H = softmax_columns(t.A);
  t.P = matmul(t.H, softmax_columns(t.B));
  return t;
}

Matrix approx_context_map(const FactorizationTrace& trace, const Matrix& R) {
  if (!trace.P) throw DomainError("approx_context_map: trace has no materialized P");
  if (R.cols() != trace.P->cols()) {
    throw ShapeError("approx_context_map: R is " + R.shape_string() + " but P is " +
                     trace.P->shape_string());
  }
  return matmul(matmul(*trace.P, transpose(R)), R);
}

Matrix factorized_combine(const Matrix& H, const Matrix& L, const Matrix& X, Order order) {
  return order == Order::left ? matmul(matmul(H, L), X) : matmul(H, matmul(L, X));
}

std::pair<Matrix, FactorizationTrace> factorized_attention(const AttentionInput& inp,
                                                           const AttentionParams& p,
                                                           const ProjectionPair& proj,
                                                           Order order) {
  check_compatible(inp, p);
  if (proj.n != inp.n) {
    throw ShapeError("factorized_attention: projection built for n=" + std::to_string(proj.n) +
                     " but input has n=" + std::to_string(inp.n));
  }
  const double s = inv_sqrt(p.d_k);
  FactorizationTrace t;
  const Matrix kw = matmul(inp.K, p.Wk);
  t.A = scale(matmul(inp.Q, p.Wq), s);
  t.B = scale(transpose(kw), s);
  t.DA_diag = exp_column_sums(t.A, "D_A");
  t.DB_diag = exp_column_sums(t.B, "D_B");
  t.H = softmax_columns(t.A);
  t.L = softmax_columns(scale(transpose(matmul(proj.E, kw)), s));
  t.X = matmul(proj.F, matmul(inp.V, p.Wv));
  Matrix out = factorized_combine(t.H, t.L, t.X, order);
  return {std::move(out), std::move(t)};
}

Matrix linformer_attention(const AttentionInput& inp, const AttentionParams& p, const Matrix& E,
                           const Matrix& F) {
  check_compatible(inp, p);
  if (E.cols() != inp.n || F.cols() != inp.n || E.rows() != F.rows()) {
    throw ShapeError("linformer_attention: E " + E.shape_string() + " and F " + F.shape_string() +
                     " must both be k x " + std::to_string(inp.n));
  }
  const Matrix qw = matmul(inp.Q, p.Wq);
  const Matrix ekw_t = transpose(matmul(E, matmul(inp.K, p.Wk)));
  const Matrix weights = softmax_rows(scale(matmul(qw, ekw_t), inv_sqrt(p.d_k)));
  return matmul(weights, matmul(F, matmul(inp.V, p.Wv)));
}

}  // namespace linattn
