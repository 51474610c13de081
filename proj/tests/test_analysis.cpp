// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "linattn/analysis.hpp"
#include "linattn/error.hpp"
#include "linattn/linalg.hpp"
#include "linattn/report.hpp"

using namespace linattn;

TEST_CASE("jl_success_bound") {
  // (0.25 - 0.125) * 64 / 4 = 2
  CHECK(jl_success_bound(64, 0.5) == doctest::Approx(1.0 - 2.0 * std::exp(-2.0)).epsilon(1e-15));
  CHECK(jl_success_bound(64, 0.5) == doctest::Approx(0.7293294335267746).epsilon(1e-14));
  // (0.09 - 0.027) * 128 / 4 = 2.016
  CHECK(jl_success_bound(128, 0.3) == doctest::Approx(1.0 - 2.0 * std::exp(-2.016)).epsilon(1e-14));
  CHECK(jl_success_bound(1, 0.5) == 0.0);
  CHECK(jl_success_bound(222, 0.5, 512.0) == doctest::Approx(1.0 - 512.0 * std::exp(-6.9375)).epsilon(1e-14));
}

TEST_CASE("verify_lemma1") {
  SUBCASE("n=256, k=64, eps=0.5") {
    RngStream rng(1);
    const LemmaVerdict v = verify_lemma1(256, 64, 0.5, 2000, rng);
    CHECK(v.lemma_id == LemmaId::lemma1);
    CHECK(v.trials == 2000);
    CHECK(v.empirical_rate == doctest::Approx(static_cast<double>(v.successes) / 2000.0));
    CHECK(v.theoretical_bound == doctest::Approx(0.7293294335267746));
    CHECK(v.within_bound());
    CHECK(v.seed == 1);
  }
  SUBCASE("bound becomes vacuous for tiny k") {
    RngStream rng(2);
    const LemmaVerdict v = verify_lemma1(32, 1, 0.9, 1000, rng);
    CHECK(v.theoretical_bound == 0.0);
    CHECK(v.within_bound());
  }
  SUBCASE("explicit x and rejection of zero x") {
    RngStream rng(3);
    Matrix x(1, 16);
    x(0, 3) = 2.0;
    const LemmaVerdict v = verify_lemma1(16, 32, 0.5, 1000, rng, x);
    CHECK(v.empirical_rate > 0.9);
    CHECK_THROWS_AS((void)verify_lemma1(16, 32, 0.5, 1000, rng, Matrix(1, 16)), DomainError);
    CHECK_THROWS_AS((void)verify_lemma1(16, 32, 0.5, 999, rng), DomainError);
    CHECK_THROWS_AS((void)verify_lemma1(16, 32, 0.5, 1000, rng, Matrix(1, 15, 1.0)), ShapeError);
  }
  SUBCASE("deterministic for a fixed seed") {
    RngStream a(4), b(4);
    const LemmaVerdict va = verify_lemma1(64, 16, 0.5, 1000, a);
    const LemmaVerdict vb = verify_lemma1(64, 16, 0.5, 1000, b);
    CHECK(va.successes == vb.successes);
    CHECK(to_json(va).dump() == to_json(vb).dump());
  }
}

TEST_CASE("verify_lemma2") {
  SUBCASE("k=128, eps=0.3") {
    RngStream rng(5);
    const LemmaVerdict v = verify_lemma2(256, 128, 0.3, 2000, rng);
    CHECK(v.lemma_id == LemmaId::lemma2);
    CHECK(v.theoretical_bound == doctest::Approx(1.0 - 2.0 * std::exp(-2.016)));
    CHECK(v.within_bound());
  }
  SUBCASE("x == y reduces to two-sided norm preservation") {
    // | ||Rx||^2 - ||x||^2 | <= eps ||x||^2
    Matrix x(1, 8);
    x(0, 0) = 1.0;
    RngStream rng(6);
    const LemmaVerdict v = verify_lemma2(8, 400, 0.3, 1000, rng, x, x);
    CHECK(v.empirical_rate > 0.99);
  }
  SUBCASE("orthogonal pair") {
    Matrix x(1, 8), y(1, 8);
    x(0, 0) = 1.0;
    y(0, 1) = 1.0;
    RngStream rng(7);
    const LemmaVerdict v = verify_lemma2(8, 128, 0.3, 1000, rng, x, y);
    CHECK(v.within_bound());
  }
}

TEST_CASE("approx_error_experiment") {
  SUBCASE("reported bound uses the union over n") {
    RngStream rng(8);
    const LemmaVerdict v = approx_error_experiment(256, 16, 0.5, 1000, rng);
    CHECK(v.k == 222);
    CHECK(v.lemma_id == LemmaId::eq1_bound);
    // 1 - 2 * 256 * exp(-0.125 * 222 / 4)
    CHECK(v.theoretical_bound == doctest::Approx(1.0 - 512.0 * std::exp(-6.9375)).epsilon(1e-13));
    CHECK(v.theoretical_bound == doctest::Approx(0.503).epsilon(1e-3));
  }
  SUBCASE("k far above n") {
    RngStream rng(9);
    const LemmaVerdict v = approx_error_experiment(16, 4, 0.5, 1000, rng, 16, 4000);
    CHECK(v.empirical_rate > 0.9);
  }
  SUBCASE("approx_criterion with identity projection") {
    const Matrix P = Matrix::identity(5);
    Matrix c(5, 1, 1.0);
    CHECK(approx_criterion(P, Matrix::identity(5), c, 1e-12));
    CHECK_FALSE(approx_criterion(P, Matrix(5, 5), c, 0.5));
  }
  SUBCASE("errors") {
    RngStream rng(10);
    CHECK_THROWS_AS((void)approx_error_experiment(1025, 16, 0.5, 1000, rng), DomainError);
    CHECK_THROWS_AS((void)approx_error_experiment(64, 16, 1.5, 1000, rng), DomainError);
  }
}

TEST_CASE("eq3_criterion and factorized_error_experiment") {
  RngStream rng(11);
  const ProjectionPair proj = make_projection_pair(32, 8, 1e-3, rng);
  SUBCASE("zero y is trivially accepted") {
    CHECK(eq3_criterion(Matrix(1, 32, 0.3), Matrix(1, 32), proj, 0.5));
  }
  SUBCASE("hand-checked scalar") {
    Matrix R(2, 3);
    R(0, 0) = 1.0;
    R(1, 1) = 1.0;
    const ProjectionPair hp = projection_pair_from_r(R, 0.5, 0);
    const Matrix x2{{0.0, 0.0, 0.0}};
    const Matrix y{{1.0, 1.0, 1.0}};
    // exp(x2 E^T) = [1, 1], F y^T = e^{-0.5} [1, 1], so the left side is
    // 2 e^{-0.5} = 1.2131 against exp(x2) y^T = 3: passes iff eps >= 0.5957.
    CHECK(eq3_criterion(x2, y, hp, 0.596));
    CHECK_FALSE(eq3_criterion(x2, y, hp, 0.595));
  }
  SUBCASE("experiment runs and reports") {
    RngStream r2(12);
    const LemmaVerdict v = factorized_error_experiment(64, 8, 0.5, 1000, r2);
    CHECK(v.lemma_id == LemmaId::eq3_bound);
    CHECK(v.trials == 1000);
    CHECK(v.empirical_rate >= 0.0);
    CHECK(v.empirical_rate <= 1.0);
    RngStream r3(12);
    const LemmaVerdict w = factorized_error_experiment(64, 8, 0.5, 1000, r3, 1e-12);
    CHECK(w.trials == 1000);
  }
}

TEST_CASE("k_independence_experiment") {
  RngStream rng(13);
  const auto pts = k_independence_experiment(4, 0.5, {16, 32}, 1000, rng, 16);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].n == 16);
  CHECK(pts[1].n == 32);
  // ceil(9 ln 4 / 0.125) = ceil(99.8)
  CHECK(pts[0].k == 100);
  CHECK(pts[1].k == 100);
  // k well above n: R^T R concentrates near I.
  CHECK(pts[0].empirical_rate > 0.5);
  CHECK_THROWS_AS((void)k_independence_experiment(4, 0.5, {}, 1000, rng), DomainError);
}

TEST_CASE("spectrum_report") {
  SUBCASE("identity") {
    const SpectrumReport r = spectrum_report(Matrix::identity(8), 2);
    CHECK(r.sigmas.size() == 8);
    CHECK(r.tail_ratio == doctest::Approx(1.0));
    CHECK(r.energy_topd == doctest::Approx(0.25));
  }
  SUBCASE("factorized context map is rank d_k") {
    RngStream rng(14);
    const AttentionInput inp = random_input(128, 32, rng);
    const AttentionParams p = random_params(32, 8, rng);
    const SpectrumReport r = spectrum_report(*context_map(inp, p).P, 8);
    CHECK(r.tail_ratio <= 1e-10);
    CHECK(r.energy_topd >= 1.0 - 1e-12);
    for (std::size_t i = 1; i < r.sigmas.size(); ++i) CHECK(r.sigmas[i] <= r.sigmas[i - 1]);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS((void)spectrum_report(Matrix(3, 4), 1), ShapeError);
    CHECK_THROWS_AS((void)spectrum_report(Matrix::identity(kSpectrumMaxSide + 1), 1), DomainError);
  }
}

TEST_CASE("gradcheck") {
  RngStream rng(15);
  const AttentionInput inp = random_input(16, 8, rng);
  const AttentionParams p = random_params(8, 4, rng);
  const ProjectionPair proj = make_projection_pair(16, 8, delta_schedule(16), rng);
  SUBCASE("central differences at h=1e-5") {
    const GradcheckReport r = gradcheck(inp, p, proj, 1e-5, 1e-6, rng);
    CHECK(r.passed);
    CHECK(r.max_rel_error.size() == 6);
    CHECK(r.worst <= 1e-6);
    CHECK(r.step == 1e-5);
  }
  SUBCASE("coarse step still agrees loosely") {
    const GradcheckReport r = gradcheck(inp, p, proj, 1e-3, 1e-4, rng);
    CHECK(r.worst <= 1e-4);
  }
  SUBCASE("zero upstream") {
    const GradcheckReport r = gradcheck(inp, p, proj, Matrix(16, 4), 1e-5, 1e-6);
    CHECK(r.passed);
    CHECK(r.worst == 0.0);
  }
  SUBCASE("step range") {
    CHECK_THROWS_AS((void)gradcheck(inp, p, proj, 1e-2, 1e-6, rng), DomainError);
    CHECK_THROWS_AS((void)gradcheck(inp, p, proj, 1e-9, 1e-6, rng), DomainError);
  }
}
