// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "linattn/matrix.hpp"
#include "linattn/rng.hpp"

namespace linattn {

/// Shared Gaussian R (k x n, entries N(0, 1/k)) with the key and value
/// projections derived from it: E = delta * R and F = exp(-delta) * R.
struct ProjectionPair {
  Matrix E;
  Matrix F;
  Matrix R;
  double delta = 0.0;
  std::size_t k = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  /// Bytes held by the three stored matrices.
  std::size_t bytes() const noexcept { return E.bytes() + F.bytes() + R.bytes(); }
};

/// ceil(5 ln n / (eps^2 - eps^3)). Requires n >= 2 and 0 < eps < 1.
std::size_t jl_dimension(std::size_t n, double eps);

/// ceil(9 ln d / (eps^2 - eps^3)); depends on the rank d only, not on n.
std::size_t jl_dimension_rank(std::size_t d, double eps);

/// The delta used for E = delta R. Defaults to max(1/n^2, 1e-300), which
/// stays below 1/n for every n >= 2. A supplied override must lie in (0, 1).
double delta_schedule(std::size_t n, std::optional<double> override_delta = std::nullopt);

/// Draws R from rng and derives E and F from it.
ProjectionPair make_projection_pair(std::size_t n, std::size_t k, double delta, RngStream& rng);

/// Rebuilds E and F from a stored R.
ProjectionPair projection_pair_from_r(Matrix R, double delta, std::uint64_t seed);

/// One JSON header line {"n":..,"k":..,"delta":..,"seed":..} followed by R as
/// matrix CSV. E and F are re-derived on load, so the round trip is exact.
std::string serialize_projection_pair(const ProjectionPair& pair);
ProjectionPair deserialize_projection_pair(const std::string& text);

}  // namespace linattn
