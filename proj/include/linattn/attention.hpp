// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "linattn/matrix.hpp"
#include "linattn/projections.hpp"
#include "linattn/rng.hpp"

namespace linattn {

/// Learned single-head weights; each is d_model x d_k.
struct AttentionParams {
  Matrix Wq;
  Matrix Wk;
  Matrix Wv;
  std::size_t d_model = 0;
  std::size_t d_k = 0;

  static AttentionParams from_weights(Matrix wq, Matrix wk, Matrix wv);
  std::size_t bytes() const noexcept { return Wq.bytes() + Wk.bytes() + Wv.bytes(); }
};

/// Query, key and value sequences, each n x d_model.
struct AttentionInput {
  Matrix Q;
  Matrix K;
  Matrix V;
  std::size_t n = 0;

  static AttentionInput from_matrices(Matrix q, Matrix k, Matrix v);
  std::size_t bytes() const noexcept { return Q.bytes() + K.bytes() + V.bytes(); }
};

/// Named intermediates of the factorized-softmax computation.
///
/// A = Q Wq / sqrt(d_k) (n x d_k) and B = (K Wk)^T / sqrt(d_k) (d_k x n).
/// DA_diag[i] = sum_j exp(A(j, i)) and DB_diag[i] = sum_j exp(B(j, i)) are the
/// column normalizers, so softmax_columns(A) = exp(A) diag(DA)^-1.
/// H, L, X are the factors of the attention head; P and P_tilde are the n x n
/// context maps, only present when explicitly requested.
struct FactorizationTrace {
  Matrix A;
  Matrix B;
  Matrix H;
  Matrix L;
  Matrix X;
  std::optional<Matrix> P;
  std::optional<Matrix> P_tilde;
  std::vector<double> DA_diag;
  std::vector<double> DB_diag;
};

struct Gradients {
  Matrix dWq;
  Matrix dWk;
  Matrix dWv;
  Matrix dQ;
  Matrix dK;
  Matrix dV;
};

enum class Order { left, right };
std::string_view to_string(Order order);

/// Largest n for which the n x n context map may be materialized.
inline constexpr std::size_t kContextMapMaxN = 2048;

/// i.i.d. N(0, 1) sequences.
AttentionInput random_input(std::size_t n, std::size_t d_model, RngStream& rng);
/// i.i.d. N(0, 1/d_model) weights.
AttentionParams random_params(std::size_t d_model, std::size_t d_k, RngStream& rng);

/// softmax_rows(Q Wq (K Wk)^T / sqrt(d_k)) V Wv. Builds the full n x n score
/// matrix.
Matrix vanilla_attention(const AttentionInput& inp, const AttentionParams& p);

/// The row-softmax n x n weight matrix used by vanilla_attention.
Matrix vanilla_context_map(const AttentionInput& inp, const AttentionParams& p);

/// Attention with the scaling function x / n in place of softmax.
/// left:  (Q Wq (K Wk)^T / n) V Wv
/// right: (Q Wq / sqrt n) ((K Wk)^T / sqrt n  V Wv)
Matrix scaled_linear_attention(const AttentionInput& inp, const AttentionParams& p, Order order);

/// P = softmax_columns(A) softmax_columns(B), with A, B, DA, DB and H kept.
/// Throws DomainError when n exceeds kContextMapMaxN.
FactorizationTrace context_map(const AttentionInput& inp, const AttentionParams& p);

/// P R^T R for a k x n matrix R. The trace must carry P.
Matrix approx_context_map(const FactorizationTrace& trace, const Matrix& R);

/// Factorized-softmax attention head:
///   H = softmax_columns(Q Wq / sqrt(d_k))            n x d_k
///   L = softmax_columns((E K Wk)^T / sqrt(d_k))      d_k x k
///   X = F V Wv                                       k x d_k
/// and the output is (H L) X for Order::left or H (L X) for Order::right.
/// No n x n matrix is formed.
std::pair<Matrix, FactorizationTrace> factorized_attention(const AttentionInput& inp,
                                                           const AttentionParams& p,
                                                           const ProjectionPair& proj,
                                                           Order order);

/// Final product of the factorized head, split out so its cost can be
/// measured on its own.
Matrix factorized_combine(const Matrix& H, const Matrix& L, const Matrix& X, Order order);

/// softmax_rows(Q Wq (E K Wk)^T / sqrt(d_k)) (F V Wv); intermediates are n x k.
Matrix linformer_attention(const AttentionInput& inp, const AttentionParams& p, const Matrix& E,
                           const Matrix& F);

/// Gradients of sum(upstream .* factorized_attention(...)) with respect to
/// every weight and input block.
Gradients factorized_attention_backward(const AttentionInput& inp, const AttentionParams& p,
                                        const ProjectionPair& proj, const Matrix& upstream);

}  // namespace linattn
