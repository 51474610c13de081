// SPDX-License-Identifier: Apache-2.0
#include "linattn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include "linattn/alloc_tracker.hpp"
#include "linattn/attention.hpp"
#include "linattn/error.hpp"
#include "linattn/linalg.hpp"
#include "linattn/matrix_io.hpp"
#include "linattn/projections.hpp"

namespace linattn {
namespace {

constexpr std::size_t kMinReps = 5;
constexpr std::size_t kMinFitPoints = 4;

bool is_quadratic(Variant v) { return v == Variant::vanilla || v == Variant::scaled_linear_left; }

struct Workload {
  AttentionInput inp;
  AttentionParams params;
  std::optional<ProjectionPair> proj;

  std::size_t argument_bytes(Variant v) const {
    std::size_t bytes = inp.bytes() + params.bytes();
    if (!proj) return bytes;
    // Linformer reads R as both projections; the factorized head reads E and F.
    return bytes + (v == Variant::linformer ? proj->R.bytes() : proj->E.bytes() + proj->F.bytes());
  }
};

void evaluate(Variant v, const Workload& w) {
  switch (v) {
    case Variant::vanilla: (void)vanilla_attention(w.inp, w.params); break;
    case Variant::scaled_linear_left: (void)scaled_linear_attention(w.inp, w.params, Order::left); break;
    case Variant::scaled_linear_right:
      (void)scaled_linear_attention(w.inp, w.params, Order::right);
      break;
    case Variant::linformer: (void)linformer_attention(w.inp, w.params, w.proj->R, w.proj->R); break;
    case Variant::factorized_left: (void)factorized_attention(w.inp, w.params, *w.proj, Order::left); break;
    case Variant::factorized_right:
      (void)factorized_attention(w.inp, w.params, *w.proj, Order::right);
      break;
  }
}

SingleRun run_once(Variant v, const Workload& w) {
  AllocationScope scope;
  const auto start = std::chrono::steady_clock::now();
  evaluate(v, w);
  const auto stop = std::chrono::steady_clock::now();
  SingleRun r;
  r.seconds = std::chrono::duration<double>(stop - start).count();
  // Clock granularity can report zero for tiny problems.
  r.seconds = std::max(r.seconds, 1e-9);
  r.peak_bytes = w.argument_bytes(v) + scope.high_water();
  return r;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::vanilla: return "vanilla";
    case Variant::scaled_linear_left: return "scaled_linear_left";
    case Variant::scaled_linear_right: return "scaled_linear_right";
    case Variant::linformer: return "linformer";
    case Variant::factorized_left: return "factorized_left";
    case Variant::factorized_right: return "factorized_right";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::vanilla, Variant::scaled_linear_left, Variant::scaled_linear_right,
                    Variant::linformer, Variant::factorized_left, Variant::factorized_right}) {
    if (to_string(v) == name) return v;
  }
  throw DomainError("unknown variant '" + std::string(name) + "'");
}

bool uses_projection(Variant v) {
  return v == Variant::linformer || v == Variant::factorized_left || v == Variant::factorized_right;
}

std::string_view to_string(KRule::Kind kind) {
  switch (kind) {
    case KRule::Kind::fixed: return "fixed";
    case KRule::Kind::jl: return "jl";
    case KRule::Kind::rank: return "rank";
  }
  return "unknown";
}

std::size_t KRule::resolve(std::size_t n, std::size_t d_k) const {
  switch (kind) {
    case Kind::fixed:
      if (k < 1) throw DomainError("k must be positive");
      return k;
    case Kind::jl: return jl_dimension(n, eps);
    case Kind::rank: return jl_dimension_rank(d_k, eps);
  }
  return k;
}

KRule KRule::parse(std::string_view name, std::size_t fixed_k, double eps) {
  KRule rule;
  rule.k = fixed_k;
  rule.eps = eps;
  if (name == "fixed") {
    rule.kind = Kind::fixed;
  } else if (name == "jl") {
    rule.kind = Kind::jl;
  } else if (name == "rank") {
    rule.kind = Kind::rank;
  } else {
    throw DomainError("unknown k rule '" + std::string(name) + "' (expected fixed, jl or rank)");
  }
  return rule;
}

std::vector<BenchRecord> time_variant(Variant variant, const std::vector<std::size_t>& n_list,
                                      std::size_t d_model, std::size_t d_k, const KRule& k_rule,
                                      std::size_t reps, RngStream& rng) {
  if (reps < kMinReps) throw DomainError("time_variant: reps must be at least " + std::to_string(kMinReps));
  if (n_list.size() < kMinFitPoints) {
    throw DomainError("time_variant: need at least " + std::to_string(kMinFitPoints) + " sequence lengths");
  }
  if (!std::is_sorted(n_list.begin(), n_list.end()) ||
      std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end()) {
    throw DomainError("time_variant: n_list must be strictly increasing");
  }
  if (n_list.front() < 2) throw DomainError("time_variant: n must be at least 2");
  if (is_quadratic(variant) && n_list.back() > kQuadraticMaxN) {
    throw DomainError("time_variant: n=" + std::to_string(n_list.back()) + " exceeds the " +
                      std::to_string(kQuadraticMaxN) + " cap for " + std::string(to_string(variant)));
  }

  std::vector<BenchRecord> records;
  for (std::size_t n : n_list) {
    Workload w{random_input(n, d_model, rng), random_params(d_model, d_k, rng), std::nullopt};
    std::size_t k = 0;
    if (uses_projection(variant)) {
      k = k_rule.resolve(n, d_k);
      w.proj = make_projection_pair(n, k, delta_schedule(n), rng);
    }
    (void)run_once(variant, w);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const SingleRun r = run_once(variant, w);
      records.push_back({variant, n, d_model, d_k, k, rep, r.seconds, r.peak_bytes});
    }
  }
  return records;
}

double time_factorized_combine(std::size_t n, std::size_t d_k, std::size_t k, Order order,
                               std::size_t reps, RngStream& rng) {
  if (reps < 1) throw DomainError("time_factorized_combine: reps must be positive");
  const Matrix H = softmax_columns(gaussian_matrix(n, d_k, 1.0, rng));
  const Matrix L = softmax_columns(gaussian_matrix(d_k, k, 1.0, rng));
  const Matrix X = gaussian_matrix(k, d_k, 1.0, rng);
  (void)factorized_combine(H, L, X, order);
  std::vector<double> secs;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    (void)factorized_combine(H, L, X, order);
    secs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return median(secs);
}

std::vector<std::pair<std::size_t, double>> median_seconds(const std::vector<BenchRecord>& records) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : records) by_n[r.n].push_back(r.seconds);
  std::vector<std::pair<std::size_t, double>> out;
  for (auto& [n, secs] : by_n) out.emplace_back(n, median(secs));
  return out;
}

SlopeFit fit_slope(const std::vector<BenchRecord>& records) {
  if (records.empty()) throw DomainError("fit_slope: no records");
  const Variant variant = records.front().variant;
  for (const auto& r : records) {
    if (r.variant != variant) throw DomainError("fit_slope: records mix variants");
    if (!(r.seconds > 0.0)) throw DomainError("fit_slope: seconds must be positive");
  }
  const auto points = median_seconds(records);
  if (points.size() < kMinFitPoints) {
    throw DomainError("fit_slope: need at least " + std::to_string(kMinFitPoints) +
                      " distinct n, got " + std::to_string(points.size()));
  }
  if (points.back().first < 8 * points.front().first) {
    throw DomainError("fit_slope: sequence lengths must span at least 8x");
  }

  const double count = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [n, s] : points) {
    mx += std::log(static_cast<double>(n));
    my += std::log(s);
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [n, s] : points) {
    const double dx = std::log(static_cast<double>(n)) - mx;
    const double dy = std::log(s) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  SlopeFit fit;
  fit.variant = variant;
  fit.n_points = points.size();
  fit.exponent = sxy / sxx;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

std::string bench_csv_row(const BenchRecord& r) {
  return std::string(to_string(r.variant)) + "," + std::to_string(r.n) + "," +
         std::to_string(r.d_model) + "," + std::to_string(r.d_k) + "," + std::to_string(r.k) + "," +
         std::to_string(r.rep) + "," + format_double(r.seconds) + "," + std::to_string(r.peak_bytes);
}

}  // namespace linattn
