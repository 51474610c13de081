// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "linattn/attention.hpp"
#include "linattn/matrix.hpp"
#include "linattn/projections.hpp"
#include "linattn/rng.hpp"

namespace linattn {

enum class LemmaId { lemma1, lemma2, eq1_bound, eq3_bound };
std::string_view to_string(LemmaId id);

/// Outcome of a Monte-Carlo check of a probabilistic bound.
struct LemmaVerdict {
  LemmaId lemma_id = LemmaId::lemma1;
  std::size_t n = 0;
  std::size_t k = 0;
  double eps = 0.0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double empirical_rate = 0.0;
  /// Predicted lower bound on the success probability, floored at 0.
  double theoretical_bound = 0.0;
  std::uint64_t seed = 0;

  /// sqrt(rate (1 - rate) / trials).
  double standard_error() const;
  /// empirical_rate >= theoretical_bound - 3 standard errors.
  bool within_bound() const;
};

/// max(0, 1 - multiplier * exp(-(eps^2 - eps^3) k / 4)).
double jl_success_bound(std::size_t k, double eps, double multiplier = 2.0);

/// Monte-Carlo shape shared by the experiments; d_model sizes the random
/// attention inputs the context maps are built from.
inline constexpr std::size_t kDefaultDModel = 64;

/// Norm preservation: success iff ||R x|| <= (1 + eps) ||x|| with a fresh
/// R (k x n, N(0, 1/k)) per trial. Without x, a random unit vector is drawn
/// once from rng. x must be a nonzero 1 x n row.
LemmaVerdict verify_lemma1(std::size_t n, std::size_t k, double eps, std::size_t trials,
                           RngStream& rng, const std::optional<Matrix>& x = std::nullopt);

/// Inner-product preservation: success iff |x R^T R y^T - x y^T| <= eps ||x|| ||y||.
LemmaVerdict verify_lemma2(std::size_t n, std::size_t k, double eps, std::size_t trials,
                           RngStream& rng, const std::optional<Matrix>& x = std::nullopt,
                           const std::optional<Matrix>& y = std::nullopt);

/// ||P R^T R c - P c|| <= eps ||P c|| for an n x 1 column c.
bool approx_criterion(const Matrix& P, const Matrix& R, const Matrix& c, double eps);

/// One random context map P, then per trial a fresh R with
/// k = jl_dimension(n, eps) (or `k_override`) and a random unit c.
/// Reported against max(0, 1 - 2n exp(-(eps^2 - eps^3) k / 4)).
LemmaVerdict approx_error_experiment(std::size_t n, std::size_t d_k, double eps, std::size_t trials,
                                     RngStream& rng, std::size_t d_model = kDefaultDModel,
                                     std::optional<std::size_t> k_override = std::nullopt);

/// |exp(x2 E^T) F y^T - exp(x2) y^T| <= eps |exp(x2) y^T| with x2 a 1 x n row
/// and y a 1 x n row; both sides are scalars.
bool eq3_criterion(const Matrix& x2, const Matrix& y, const ProjectionPair& proj, double eps);

/// Per trial: fresh attention inputs, one row of B as x2, one column of V Wv
/// as y, and a fresh projection pair with delta from delta_schedule.
LemmaVerdict factorized_error_experiment(std::size_t n, std::size_t d_k, double eps,
                                         std::size_t trials, RngStream& rng,
                                         std::optional<double> delta_override = std::nullopt,
                                         std::size_t d_model = kDefaultDModel);

struct KIndependencePoint {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double empirical_rate = 0.0;
};

/// Runs the approx_error_experiment criterion at every n with the rank-based
/// k = jl_dimension_rank(d_k, eps) held fixed.
std::vector<KIndependencePoint> k_independence_experiment(std::size_t d_k, double eps,
                                                          const std::vector<std::size_t>& n_list,
                                                          std::size_t trials, RngStream& rng,
                                                          std::size_t d_model = kDefaultDModel);

struct SpectrumReport {
  std::vector<double> sigmas;
  std::size_t d_k = 0;
  /// sigma_{d_k + 1} / sigma_1 (zero when there is no such singular value).
  double tail_ratio = 0.0;
  /// Fraction of squared singular mass in the leading d_k values.
  double energy_topd = 0.0;
};

/// P must be square with side at most kSpectrumMaxSide.
inline constexpr std::size_t kSpectrumMaxSide = 1024;
SpectrumReport spectrum_report(const Matrix& P, std::size_t d_k);

struct GradcheckReport {
  /// Keyed by block name: Wq, Wk, Wv, Q, K, V.
  std::map<std::string, double> max_rel_error;
  double worst = 0.0;
  double step = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Relative error with an absolute floor: |a - f| / max(|a|, |f|, floor / rel_tol).
/// A value <= rel_tol means |a - f| <= max(rel_tol * max(|a|, |f|), floor).
inline constexpr double kGradAbsoluteFloor = 1e-8;

/// Compares factorized_attention_backward against central differences of
/// sum(upstream .* output) for every entry of every block.
GradcheckReport gradcheck(const AttentionInput& inp, const AttentionParams& p,
                          const ProjectionPair& proj, const Matrix& upstream, double h,
                          double tolerance);
/// Same, with a random N(0, 1) upstream drawn from rng.
GradcheckReport gradcheck(const AttentionInput& inp, const AttentionParams& p,
                          const ProjectionPair& proj, double h, double tolerance, RngStream& rng);

}  // namespace linattn
