// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "linattn/attention.hpp"
#include "linattn/rng.hpp"

namespace linattn {

enum class Variant {
  vanilla,
  scaled_linear_left,
  scaled_linear_right,
  linformer,
  factorized_left,
  factorized_right,
};

std::string_view to_string(Variant v);
/// Inverse of to_string; DomainError on unknown names.
Variant parse_variant(std::string_view name);
bool uses_projection(Variant v);

/// Largest n accepted for variants that build an n x n matrix.
inline constexpr std::size_t kQuadraticMaxN = 16384;

/// How the projection dimension k is chosen for each sequence length.
struct KRule {
  enum class Kind { fixed, jl, rank };
  Kind kind = Kind::fixed;
  std::size_t k = 64;  // used by Kind::fixed
  double eps = 0.5;    // used by Kind::jl and Kind::rank

  std::size_t resolve(std::size_t n, std::size_t d_k) const;
  static KRule parse(std::string_view name, std::size_t fixed_k, double eps);
};
std::string_view to_string(KRule::Kind kind);

struct BenchRecord {
  Variant variant = Variant::vanilla;
  std::size_t n = 0;
  std::size_t d_model = 0;
  std::size_t d_k = 0;
  std::size_t k = 0;  // 0 for variants that take no projection
  std::size_t rep = 0;
  double seconds = 0.0;
  std::size_t peak_bytes = 0;
};

struct SlopeFit {
  Variant variant = Variant::vanilla;
  double exponent = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// Evaluates one variant once and returns the bytes accounted to the call:
/// every argument matrix (inputs, weights, projections) plus the high-water
/// mark of buffers the evaluator allocates.
struct SingleRun {
  double seconds = 0.0;
  std::size_t peak_bytes = 0;
};

/// Times `variant` at each n. For every n: fresh inputs from rng, one
/// discarded warm-up, then `reps` timed calls on a monotonic clock.
/// Timed sections run on the calling thread only.
std::vector<BenchRecord> time_variant(Variant variant, const std::vector<std::size_t>& n_list,
                                      std::size_t d_model, std::size_t d_k, const KRule& k_rule,
                                      std::size_t reps, RngStream& rng);

/// Median time of factorized_combine(H, L, X, order) alone over `reps`
/// calls (after one warm-up) on random column-stochastic H and L.
double time_factorized_combine(std::size_t n, std::size_t d_k, std::size_t k, Order order,
                               std::size_t reps, RngStream& rng);

/// Least squares on (ln n, ln median seconds) over the records' distinct n.
/// Requires one variant, at least 4 distinct n, spanning at least 8x.
SlopeFit fit_slope(const std::vector<BenchRecord>& records);

/// Median seconds per n, in ascending n.
std::vector<std::pair<std::size_t, double>> median_seconds(const std::vector<BenchRecord>& records);

inline constexpr std::string_view kBenchCsvHeader = "variant,n,d_model,d_k,k,rep,seconds,peak_bytes";
std::string bench_csv_row(const BenchRecord& r);

}  // namespace linattn
