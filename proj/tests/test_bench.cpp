// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "linattn/bench.hpp"
#include "linattn/error.hpp"

using namespace linattn;

namespace {

std::vector<BenchRecord> synthetic(double c, double power, const std::vector<std::size_t>& ns) {
  std::vector<BenchRecord> out;
  for (std::size_t n : ns) {
    for (std::size_t rep = 0; rep < 3; ++rep) {
      BenchRecord r;
      r.variant = Variant::factorized_right;
      r.n = n;
      r.rep = rep;
      // Median of {t, 2t, 0.5 t} is t.
      const double t = c * std::pow(static_cast<double>(n), power);
      r.seconds = rep == 0 ? t : (rep == 1 ? 2 * t : 0.5 * t);
      out.push_back(r);
    }
  }
  return out;
}

std::size_t peak_at(const std::vector<BenchRecord>& rs, std::size_t n) {
  for (const auto& r : rs)
    if (r.n == n) return r.peak_bytes;
  return 0;
}

}  // namespace

TEST_CASE("variant names round trip") {
  for (Variant v : {Variant::vanilla, Variant::scaled_linear_left, Variant::scaled_linear_right, Variant::linformer,
                    Variant::factorized_left, Variant::factorized_right})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS((void)parse_variant("softmax"), DomainError);
  CHECK(uses_projection(Variant::linformer));
  CHECK_FALSE(uses_projection(Variant::vanilla));
}

TEST_CASE("KRule") {
  CHECK(KRule::parse("fixed", 48, 0.5).resolve(4096, 32) == 48);
  CHECK(KRule::parse("jl", 48, 0.5).resolve(512, 32) == 250);
  CHECK(KRule::parse("rank", 48, 0.5).resolve(1 << 20, 64) == 300);
  CHECK_THROWS_AS((void)KRule::parse("auto", 48, 0.5), DomainError);
}

TEST_CASE("fit_slope") {
  const std::vector<std::size_t> ns{512, 1024, 2048, 4096, 8192};
  SUBCASE("exact power laws") {
    const SlopeFit quad = fit_slope(synthetic(3e-9, 2.0, ns));
    CHECK(quad.exponent == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(quad.r_squared == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(quad.n_points == 5);
    const SlopeFit lin = fit_slope(synthetic(7e-6, 1.0, ns));
    CHECK(lin.exponent == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("median per n") {
    const auto med = median_seconds(synthetic(1.0, 1.0, {4, 8}));
    REQUIRE(med.size() == 2);
    CHECK(med[0].first == 4);
    CHECK(med[0].second == doctest::Approx(4.0));
  }
  SUBCASE("insufficient data") {
    CHECK_THROWS_AS((void)fit_slope(synthetic(1.0, 1.0, {512, 1024, 2048})), DomainError);
    CHECK_THROWS_AS((void)fit_slope(synthetic(1.0, 1.0, {512, 600, 700, 800})), DomainError);
  }
}

TEST_CASE("time_variant") {
  const KRule fixed{KRule::Kind::fixed, 16, 0.5};
  SUBCASE("record layout and deterministic memory") {
    RngStream a(1), b(1);
    const auto ra = time_variant(Variant::factorized_right, {64, 128, 256, 512}, 16, 8, fixed, 5, a);
    const auto rb = time_variant(Variant::factorized_right, {64, 128, 256, 512}, 16, 8, fixed, 5, b);
    REQUIRE(ra.size() == 20);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].peak_bytes == rb[i].peak_bytes);
      CHECK(ra[i].k == 16);
      CHECK(ra[i].seconds > 0.0);
    }
    CHECK(ra[5].n == 128);
    CHECK(ra[5].rep == 0);
    CHECK(bench_csv_row(ra[0]).rfind("factorized_right,64,16,8,16,0,", 0) == 0);
  }
  SUBCASE("vanilla memory quadruples, factorized at most 2.5x") {
    RngStream rng(2);
    const std::vector<std::size_t> ns{256, 512, 1024, 2048};
    const auto van = time_variant(Variant::vanilla, ns, 32, 16, fixed, 5, rng);
    const auto fac = time_variant(Variant::factorized_right, ns, 32, 16, fixed, 5, rng);
    for (std::size_t n : {1024u, 2048u}) {
      const double r = static_cast<double>(peak_at(van, n)) / static_cast<double>(peak_at(van, n / 2));
      CHECK(r >= 3.5);
      CHECK(r <= 4.5);
    }
    for (std::size_t n : {512u, 1024u, 2048u}) {
      const double r = static_cast<double>(peak_at(fac, n)) / static_cast<double>(peak_at(fac, n / 2));
      CHECK(r <= 2.5);
    }
    CHECK(van[0].k == 0);
  }
  SUBCASE("argument validation") {
    RngStream rng(3);
    CHECK_THROWS_AS((void)time_variant(Variant::vanilla, {64, 128, 256, 512}, 8, 8, fixed, 4, rng), DomainError);
    CHECK_THROWS_AS((void)time_variant(Variant::vanilla, {64, 128, 256}, 8, 8, fixed, 5, rng), DomainError);
    CHECK_THROWS_AS((void)time_variant(Variant::vanilla, {64, 128, 128, 256}, 8, 8, fixed, 5, rng), DomainError);
    CHECK_THROWS_AS((void)time_variant(Variant::vanilla, {64, 128, 256, kQuadraticMaxN + 1}, 8, 8, fixed, 5, rng),
                    DomainError);
  }
}

TEST_CASE("factorized orders: right is not slower than left") {
  RngStream rng(4);
  const double left = time_factorized_combine(2048, 32, 128, Order::left, 5, rng);
  const double right = time_factorized_combine(2048, 32, 128, Order::right, 5, rng);
  CHECK(right <= left);
}

TEST_CASE("combine stage cost does not grow with k") {
  RngStream rng(5);
  (void)time_factorized_combine(4096, 32, 32, Order::right, 5, rng);
  const double k32 = time_factorized_combine(4096, 32, 32, Order::right, 31, rng);
  const double k256 = time_factorized_combine(4096, 32, 256, Order::right, 31, rng);
  CHECK(std::abs(k256 - k32) / k32 < 0.25);
}
