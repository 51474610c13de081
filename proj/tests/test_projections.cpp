// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "linattn/error.hpp"
#include "linattn/linalg.hpp"
#include "linattn/projections.hpp"

using namespace linattn;

TEST_CASE("jl_dimension") {
  // ceil(5 * ln 512 / 0.125) = ceil(249.53)
  CHECK(jl_dimension(512, 0.5) == 250);
  // ceil(5 * ln 2 / 0.125) = ceil(27.73)
  CHECK(jl_dimension(2, 0.5) == 28);
  CHECK(jl_dimension(256, 0.5) == 222);
  CHECK_THROWS_AS((void)jl_dimension(256, 0.0), DomainError);
  CHECK_THROWS_AS((void)jl_dimension(256, 1.0), DomainError);
  CHECK_THROWS_AS((void)jl_dimension(1, 0.5), DomainError);
}

TEST_CASE("jl_dimension_rank") {
  // ceil(9 * ln 64 / 0.125) = ceil(299.44)
  CHECK(jl_dimension_rank(64, 0.5) == 300);
  // ceil(9 * ln 2 / 0.125) = ceil(49.91)
  CHECK(jl_dimension_rank(2, 0.5) == 50);
  // ceil(9 * ln 16 / 0.125) = ceil(199.63)
  CHECK(jl_dimension_rank(16, 0.5) == 200);
  CHECK_THROWS_AS((void)jl_dimension_rank(16, -0.1), DomainError);
}

TEST_CASE("k schedules are monotone") {
  for (double eps : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    std::size_t prev = 0;
    for (std::size_t n = 2; n < 5000; n = n * 3 / 2 + 1) {
      const std::size_t k = jl_dimension(n, eps);
      CHECK(k >= prev);
      prev = k;
    }
  }
  // Smaller eps never asks for a smaller k on the range where
  // eps^2 - eps^3 is increasing in eps (eps < 2/3).
  for (std::size_t n : {2u, 10u, 512u, 4096u}) {
    std::size_t prev = 0;
    for (double eps = 0.65; eps > 0.05; eps -= 0.05) {
      const std::size_t k = jl_dimension(n, eps);
      const std::size_t kr = jl_dimension_rank(n, eps);
      CHECK(k >= prev);
      CHECK(kr >= k);
      prev = k;
    }
  }
}

TEST_CASE("delta_schedule") {
  CHECK(delta_schedule(4) == 0.0625);
  CHECK(delta_schedule(4) == std::ldexp(1.0, -4));
  CHECK(delta_schedule(10) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(delta_schedule(123456, 0.5) == 0.5);
  CHECK_THROWS_AS((void)delta_schedule(10, 0.0), DomainError);
  CHECK_THROWS_AS((void)delta_schedule(10, 1.0), DomainError);
  for (std::size_t n = 2; n < 100000; n = n * 2 + 1) {
    const double d = delta_schedule(n);
    CHECK(d > 0.0);
    CHECK(d < 1.0 / static_cast<double>(n));
  }
}

TEST_CASE("make_projection_pair") {
  RngStream rng(7);
  const ProjectionPair p = make_projection_pair(64, 16, 0.01, rng);
  CHECK(p.E.rows() == 16);
  CHECK(p.E.cols() == 64);
  CHECK(p.F.rows() == 16);
  CHECK(p.R.cols() == 64);
  CHECK(p.k == 16);
  CHECK(p.n == 64);
  CHECK(p.seed == 7);

  SUBCASE("E is exactly delta R and F is exp(-delta) R") {
    CHECK(frobenius_norm(subtract(p.E, scale(p.R, p.delta))) == 0.0);
    CHECK(frobenius_norm(subtract(p.F, scale(p.R, std::exp(-p.delta)))) <=
          1e-15 * frobenius_norm(p.R));
  }
  SUBCASE("entry ratio forced by construction") {
    const double ratio = p.delta * std::exp(p.delta);
    for (std::size_t i = 0; i < p.R.rows(); ++i) {
      for (std::size_t j = 0; j < p.R.cols(); ++j) {
        if (p.R(i, j) != 0.0) CHECK(p.E(i, j) / p.F(i, j) == doctest::Approx(ratio).epsilon(1e-14));
      }
    }
  }
  SUBCASE("R has variance 1/k") {
    RngStream big(99);
    const ProjectionPair q = make_projection_pair(4096, 64, 0.5, big);
    double ss = 0.0;
    for (double v : q.R.data()) ss += v * v;
    CHECK(ss / static_cast<double>(q.R.size()) == doctest::Approx(1.0 / 64).epsilon(0.02));
  }
  SUBCASE("tiny delta leaves F equal to R") {
    RngStream r2(7);
    const ProjectionPair q = make_projection_pair(64, 16, 1e-300, r2);
    CHECK(q.F == q.R);
  }
}

TEST_CASE("projection pair serialization") {
  RngStream rng(21);
  const ProjectionPair p = make_projection_pair(12, 5, delta_schedule(12), rng);
  const std::string text = serialize_projection_pair(p);
  CHECK(text.rfind("{\"n\":12,\"k\":5,\"delta\":", 0) == 0);
  const ProjectionPair q = deserialize_projection_pair(text);
  CHECK(q.R == p.R);
  CHECK(q.E == p.E);
  CHECK(q.F == p.F);
  CHECK(q.delta == p.delta);
  CHECK(q.seed == 21);

  const std::string bad = "{\"n\":13,\"k\":5,\"delta\":0.1,\"seed\":1}\n" + text.substr(text.find('\n') + 1);
  CHECK_THROWS_AS((void)deserialize_projection_pair(bad), ShapeError);
}
