// SPDX-License-Identifier: Apache-2.0
#include "linattn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "linattn/error.hpp"
#include "linattn/linalg.hpp"

namespace linattn {
namespace {

constexpr std::size_t kMinLemmaTrials = 1000;
constexpr std::size_t kExperimentMaxN = 1024;

void check_eps(double eps, const char* op) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError(std::string(op) + ": eps must lie in (0, 1)");
}

void check_trials(std::size_t trials, std::size_t minimum, const char* op) {
  if (trials < minimum) {
    throw DomainError(std::string(op) + ": trials must be at least " + std::to_string(minimum));
  }
}

void check_experiment_n(std::size_t n, const char* op) {
  if (n < 2 || n > kExperimentMaxN) {
    throw DomainError(std::string(op) + ": n must lie in [2, " + std::to_string(kExperimentMaxN) +
                      "], got " + std::to_string(n));
  }
}

// Every experiment takes one draw from the caller's stream and derives the
// per-trial streams from it, so trial t sees the same randomness no matter
// how the trials are scheduled.
RngStream fork(RngStream& rng) { return RngStream(rng.next_u64(), rng.stream_index()); }

Matrix random_unit_column(std::size_t n, RngStream& rng) {
  Matrix c = gaussian_matrix(n, 1, 1.0, rng);
  return scale(c, 1.0 / frobenius_norm(c));
}

Matrix as_column(const Matrix& v, std::size_t n, const char* what) {
  if (v.rows() == 1 && v.cols() == n) return transpose(v);
  if (v.cols() == 1 && v.rows() == n) return v;
  throw ShapeError(std::string(what) + " must be a vector of length " + std::to_string(n) + ", got " +
                   v.shape_string());
}

double dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

LemmaVerdict finish(LemmaId id, std::size_t n, std::size_t k, double eps, std::size_t trials,
                    std::size_t successes, double bound, std::uint64_t seed) {
  LemmaVerdict v;
  v.lemma_id = id;
  v.n = n;
  v.k = k;
  v.eps = eps;
  v.trials = trials;
  v.successes = successes;
  v.empirical_rate = static_cast<double>(successes) / static_cast<double>(trials);
  v.theoretical_bound = bound;
  v.seed = seed;
  return v;
}

}  // namespace

std::string_view to_string(LemmaId id) {
  switch (id) {
    case LemmaId::lemma1: return "lemma1";
    case LemmaId::lemma2: return "lemma2";
    case LemmaId::eq1_bound: return "eq1_bound";
    case LemmaId::eq3_bound: return "eq3_bound";
  }
  return "unknown";
}

double LemmaVerdict::standard_error() const {
  return std::sqrt(empirical_rate * (1.0 - empirical_rate) / static_cast<double>(trials));
}

bool LemmaVerdict::within_bound() const {
  return empirical_rate >= std::max(0.0, theoretical_bound) - 3.0 * standard_error();
}

double jl_success_bound(std::size_t k, double eps, double multiplier) {
  const double exponent = -(eps * eps - eps * eps * eps) * static_cast<double>(k) / 4.0;
  return std::max(0.0, 1.0 - multiplier * std::exp(exponent));
}

LemmaVerdict verify_lemma1(std::size_t n, std::size_t k, double eps, std::size_t trials,
                           RngStream& rng, const std::optional<Matrix>& x) {
  check_eps(eps, "verify_lemma1");
  check_trials(trials, kMinLemmaTrials, "verify_lemma1");
  if (n < 1 || k < 1) throw DomainError("verify_lemma1: n and k must be positive");
  RngStream root = fork(rng);
  RngStream vec_rng = root.substream(0);
  const Matrix xc = x ? as_column(*x, n, "verify_lemma1: x") : random_unit_column(n, vec_rng);
  const double xnorm = frobenius_norm(xc);
  if (xnorm == 0.0) throw DomainError("verify_lemma1: x must be nonzero");

  const RngStream trial_root = root.substream(1);
  const double variance = 1.0 / static_cast<double>(k);
  std::size_t successes = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream trial_rng = trial_root.substream(t);
    const Matrix R = gaussian_matrix(k, n, variance, trial_rng);
    if (frobenius_norm(matmul(R, xc)) <= (1.0 + eps) * xnorm) ++successes;
  }
  return finish(LemmaId::lemma1, n, k, eps, trials, successes, jl_success_bound(k, eps), rng.seed());
}

LemmaVerdict verify_lemma2(std::size_t n, std::size_t k, double eps, std::size_t trials,
                           RngStream& rng, const std::optional<Matrix>& x,
                           const std::optional<Matrix>& y) {
  check_eps(eps, "verify_lemma2");
  check_trials(trials, kMinLemmaTrials, "verify_lemma2");
  if (n < 1 || k < 1) throw DomainError("verify_lemma2: n and k must be positive");
  RngStream root = fork(rng);
  RngStream vec_rng = root.substream(0);
  const Matrix xc = x ? as_column(*x, n, "verify_lemma2: x") : random_unit_column(n, vec_rng);
  const Matrix yc = y ? as_column(*y, n, "verify_lemma2: y") : random_unit_column(n, vec_rng);
  const double xnorm = frobenius_norm(xc);
  const double ynorm = frobenius_norm(yc);
  if (xnorm == 0.0 || ynorm == 0.0) throw DomainError("verify_lemma2: x and y must be nonzero");
  const double exact = dot(xc, yc);

  const RngStream trial_root = root.substream(1);
  const double variance = 1.0 / static_cast<double>(k);
  std::size_t successes = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream trial_rng = trial_root.substream(t);
    const Matrix R = gaussian_matrix(k, n, variance, trial_rng);
    const double projected = dot(matmul(R, xc), matmul(R, yc));
    if (std::abs(projected - exact) <= eps * xnorm * ynorm) ++successes;
  }
  return finish(LemmaId::lemma2, n, k, eps, trials, successes, jl_success_bound(k, eps), rng.seed());
}

bool approx_criterion(const Matrix& P, const Matrix& R, const Matrix& c, double eps) {
  if (P.rows() != P.cols() || R.cols() != P.cols() || c.rows() != P.cols() || c.cols() != 1) {
    throw ShapeError("approx_criterion: incompatible P " + P.shape_string() + ", R " +
                     R.shape_string() + ", c " + c.shape_string());
  }
  const Matrix pc = matmul(P, c);
  const Matrix projected = matmul(P, matmul(transpose(R), matmul(R, c)));
  return frobenius_norm(subtract(projected, pc)) <= eps * frobenius_norm(pc);
}

LemmaVerdict approx_error_experiment(std::size_t n, std::size_t d_k, double eps, std::size_t trials,
                                     RngStream& rng, std::size_t d_model,
                                     std::optional<std::size_t> k_override) {
  check_eps(eps, "approx_error_experiment");
  check_experiment_n(n, "approx_error_experiment");
  check_trials(trials, 1, "approx_error_experiment");
  const std::size_t k = k_override.value_or(jl_dimension(n, eps));
  if (k < 1) throw DomainError("approx_error_experiment: k must be positive");

  RngStream root = fork(rng);
  RngStream setup = root.substream(0);
  const AttentionInput inp = random_input(n, d_model, setup);
  const AttentionParams params = random_params(d_model, d_k, setup);
  const Matrix P = *context_map(inp, params).P;

  const RngStream trial_root = root.substream(1);
  const double variance = 1.0 / static_cast<double>(k);
  std::size_t successes = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream trial_rng = trial_root.substream(t);
    const Matrix R = gaussian_matrix(k, n, variance, trial_rng);
    const Matrix c = random_unit_column(n, trial_rng);
    if (approx_criterion(P, R, c, eps)) ++successes;
  }
  return finish(LemmaId::eq1_bound, n, k, eps, trials, successes,
                jl_success_bound(k, eps, 2.0 * static_cast<double>(n)), rng.seed());
}

bool eq3_criterion(const Matrix& x2, const Matrix& y, const ProjectionPair& proj, double eps) {
  if (x2.rows() != 1 || y.rows() != 1 || x2.cols() != proj.n || y.cols() != proj.n) {
    throw ShapeError("eq3_criterion: x2 " + x2.shape_string() + " and y " + y.shape_string() +
                     " must be 1 x " + std::to_string(proj.n));
  }
  const Matrix yc = transpose(y);
  const double projected = matmul(exp_elementwise(matmul(x2, transpose(proj.E))),
                                  matmul(proj.F, yc))(0, 0);
  const double exact = matmul(exp_elementwise(x2), yc)(0, 0);
  return std::abs(projected - exact) <= eps * std::abs(exact);
}

LemmaVerdict factorized_error_experiment(std::size_t n, std::size_t d_k, double eps,
                                         std::size_t trials, RngStream& rng,
                                         std::optional<double> delta_override, std::size_t d_model) {
  check_eps(eps, "factorized_error_experiment");
  check_experiment_n(n, "factorized_error_experiment");
  check_trials(trials, 1, "factorized_error_experiment");
  const std::size_t k = jl_dimension(n, eps);
  const double delta = delta_schedule(n, delta_override);
  const double s = 1.0 / std::sqrt(static_cast<double>(d_k));

  const RngStream trial_root = fork(rng).substream(1);
  std::size_t successes = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream trial_rng = trial_root.substream(t);
    const AttentionInput inp = random_input(n, d_model, trial_rng);
    const AttentionParams params = random_params(d_model, d_k, trial_rng);
    const std::size_t row = trial_rng.next_u64() % d_k;
    const std::size_t col = trial_rng.next_u64() % d_k;
    const Matrix kw = matmul(inp.K, params.Wk);
    const Matrix vw = matmul(inp.V, params.Wv);
    Matrix x2(1, n);
    Matrix y(1, n);
    for (std::size_t j = 0; j < n; ++j) {
      x2(0, j) = kw(j, row) * s;
      y(0, j) = vw(j, col);
    }
    const ProjectionPair proj = make_projection_pair(n, k, delta, trial_rng);
    if (eq3_criterion(x2, y, proj, eps)) ++successes;
  }
  return finish(LemmaId::eq3_bound, n, k, eps, trials, successes, jl_success_bound(k, eps),
                rng.seed());
}

std::vector<KIndependencePoint> k_independence_experiment(std::size_t d_k, double eps,
                                                          const std::vector<std::size_t>& n_list,
                                                          std::size_t trials, RngStream& rng,
                                                          std::size_t d_model) {
  check_eps(eps, "k_independence_experiment");
  if (n_list.empty()) throw DomainError("k_independence_experiment: n_list is empty");
  for (std::size_t n : n_list) check_experiment_n(n, "k_independence_experiment");
  const std::size_t k = jl_dimension_rank(d_k, eps);

  const RngStream root = fork(rng);
  std::vector<KIndependencePoint> points;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    RngStream point_rng = root.substream(i);
    const LemmaVerdict v = approx_error_experiment(n_list[i], d_k, eps, trials, point_rng, d_model, k);
    points.push_back({n_list[i], k, v.trials, v.successes, v.empirical_rate});
  }
  return points;
}

SpectrumReport spectrum_report(const Matrix& P, std::size_t d_k) {
  if (P.rows() != P.cols()) throw ShapeError("spectrum_report: P must be square, got " + P.shape_string());
  if (P.rows() > kSpectrumMaxSide) {
    throw DomainError("spectrum_report: side " + std::to_string(P.rows()) + " exceeds " +
                      std::to_string(kSpectrumMaxSide));
  }
  SpectrumReport r;
  r.d_k = d_k;
  r.sigmas = singular_values(P);
  const double top = r.sigmas.empty() ? 0.0 : r.sigmas.front();
  if (top > 0.0 && d_k < r.sigmas.size()) r.tail_ratio = r.sigmas[d_k] / top;
  double total = 0.0;
  double head = 0.0;
  for (std::size_t i = 0; i < r.sigmas.size(); ++i) {
    const double e = r.sigmas[i] * r.sigmas[i];
    total += e;
    if (i < d_k) head += e;
  }
  r.energy_topd = total > 0.0 ? std::clamp(head / total, 0.0, 1.0) : 0.0;
  return r;
}

GradcheckReport gradcheck(const AttentionInput& inp, const AttentionParams& p,
                          const ProjectionPair& proj, const Matrix& upstream, double h,
                          double tolerance) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw DomainError("gradcheck: step must lie in [1e-7, 1e-3]");
  if (!(tolerance > 0.0)) throw DomainError("gradcheck: tolerance must be positive");
  const Gradients analytic = factorized_attention_backward(inp, p, proj, upstream);

  AttentionInput xi = inp;
  AttentionParams xp = p;
  auto functional = [&] { return dot(factorized_attention(xi, xp, proj, Order::right).first, upstream); };

  struct Block {
    const char* name;
    Matrix* primal;
    const Matrix* grad;
  };
  const Block blocks[] = {
      {"Wq", &xp.Wq, &analytic.dWq}, {"Wk", &xp.Wk, &analytic.dWk}, {"Wv", &xp.Wv, &analytic.dWv},
      {"Q", &xi.Q, &analytic.dQ},    {"K", &xi.K, &analytic.dK},    {"V", &xi.V, &analytic.dV},
  };

  GradcheckReport report;
  report.step = h;
  report.tolerance = tolerance;
  const double denom_floor = kGradAbsoluteFloor / tolerance;
  for (const Block& b : blocks) {
    double worst = 0.0;
    auto values = b.primal->data();
    auto grads = b.grad->data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double plus = functional();
      values[i] = saved - h;
      const double minus = functional();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double denom = std::max({std::abs(grads[i]), std::abs(numeric), denom_floor});
      worst = std::max(worst, std::abs(grads[i] - numeric) / denom);
    }
    report.max_rel_error[b.name] = worst;
    report.worst = std::max(report.worst, worst);
  }
  report.passed = report.worst <= tolerance;
  return report;
}

GradcheckReport gradcheck(const AttentionInput& inp, const AttentionParams& p,
                          const ProjectionPair& proj, double h, double tolerance, RngStream& rng) {
  const Matrix upstream = gaussian_matrix(inp.n, p.d_k, 1.0, rng);
  return gradcheck(inp, p, proj, upstream, h, tolerance);
}

}  // namespace linattn
