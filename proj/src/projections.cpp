// SPDX-License-Identifier: Apache-2.0
#include "linattn/projections.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "linattn/error.hpp"
#include "linattn/linalg.hpp"
#include "linattn/matrix_io.hpp"

namespace linattn {
namespace {

std::size_t jl_formula(double coefficient, std::size_t size, double eps, const char* name) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError(std::string(name) + ": eps must lie in (0, 1), got " + format_double(eps));
  }
  if (size < 2) throw DomainError(std::string(name) + ": size must be at least 2");
  const double k = std::ceil(coefficient * std::log(static_cast<double>(size)) /
                             (eps * eps - eps * eps * eps));
  return static_cast<std::size_t>(k);
}

}  // namespace

std::size_t jl_dimension(std::size_t n, double eps) { return jl_formula(5.0, n, eps, "jl_dimension"); }

std::size_t jl_dimension_rank(std::size_t d, double eps) {
  return jl_formula(9.0, d, eps, "jl_dimension_rank");
}

double delta_schedule(std::size_t n, std::optional<double> override_delta) {
  if (n < 1) throw DomainError("delta_schedule: n must be at least 1");
  if (override_delta) {
    const double d = *override_delta;
    if (!(d > 0.0 && d < 1.0)) {
      throw DomainError("delta_schedule: override must lie in (0, 1), got " + format_double(d));
    }
    return d;
  }
  const double nn = static_cast<double>(n);
  return std::max(1.0 / (nn * nn), 1e-300);
}

ProjectionPair projection_pair_from_r(Matrix R, double delta, std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("projection pair: delta must lie in (0, 1), got " + format_double(delta));
  }
  ProjectionPair pair;
  pair.k = R.rows();
  pair.n = R.cols();
  pair.delta = delta;
  pair.seed = seed;
  pair.E = scale(R, delta);
  pair.F = scale(R, std::exp(-delta));
  pair.R = std::move(R);
  return pair;
}

ProjectionPair make_projection_pair(std::size_t n, std::size_t k, double delta, RngStream& rng) {
  if (n < 1 || k < 1) throw DomainError("make_projection_pair: n and k must be positive");
  Matrix R = gaussian_matrix(k, n, 1.0 / static_cast<double>(k), rng);
  return projection_pair_from_r(std::move(R), delta, rng.seed());
}

std::string serialize_projection_pair(const ProjectionPair& pair) {
  nlohmann::ordered_json header;
  header["n"] = pair.n;
  header["k"] = pair.k;
  header["delta"] = pair.delta;
  header["seed"] = pair.seed;
  return header.dump() + "\n" + matrix_to_csv(pair.R);
}

ProjectionPair deserialize_projection_pair(const std::string& text) {
  const auto newline = text.find('\n');
  if (newline == std::string::npos) throw DomainError("projection pair: missing JSON header line");
  const auto header = nlohmann::json::parse(text.substr(0, newline));
  Matrix R = matrix_from_csv(std::string_view(text).substr(newline + 1));
  const auto n = header.at("n").get<std::size_t>();
  const auto k = header.at("k").get<std::size_t>();
  if (R.rows() != k || R.cols() != n) {
    throw ShapeError("projection pair: header says " + std::to_string(k) + "x" + std::to_string(n) +
                     " but R is " + R.shape_string());
  }
  return projection_pair_from_r(std::move(R), header.at("delta").get<double>(),
                                header.at("seed").get<std::uint64_t>());
}

}  // namespace linattn
