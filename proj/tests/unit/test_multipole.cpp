#include <doctest.h>

#include <cmath>

#include "harmapprox/multipole.hpp"

using namespace ha;

namespace {

const ScalarField& bump() {
  static const ScalarField f = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6);
  return f;
}

}  // namespace

TEST_SUITE("multipole") {
  TEST_CASE("re-centered moments equal moments computed at the new center") {
    const BumpPartition P(3, 2);
    const DyadicIndex q = dyadic_index_of(Vec{0.9, 1.1, 1.0}, 2);
    const Vec z = q.cube().center(), c{0.6, 1.4, 0.9};
    const CubeMoments a = compute_moments(bump(), P, q, z, 5);
    const CubeMoments b = compute_moments(bump(), P, q, c, 5);
    const auto t = translate_moments(a.M, 3, 5, z, c, 5);
    double scale = 0;
    for (double m : b.M) scale = std::max(scale, std::abs(m));
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(t[i] - b.M[i]) <= 1e-9 * scale);
  }

  TEST_CASE("value-only coefficients agree with the form before integration by parts") {
    const BumpPartition P(3, 2);
    const DyadicIndex q = dyadic_index_of(Vec{0.9, 1.1, 1.0}, 2);
    PorosityBall ball;
    ball.center = Vec{0.8, 1.2, 1.05};
    ball.radius = 0.05;
    const MultiIndexSet S(3, 3);
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double a = moment_coefficient(bump(), P, q, ball, S[i]);
      const double b = moment_coefficient_pre_parts(bump(), P, q, ball.center, S[i]);
      CHECK(a == doctest::Approx(b).epsilon(1e-5).scale(1e-8));
    }
  }

  TEST_CASE("far multipole series converges to the localized value") {
    const BumpPartition P(3, 2);
    const DyadicIndex q = dyadic_index_of(Vec{0.9, 1.1, 1.0}, 2);
    PorosityBall ball;
    ball.center = q.cube().center();
    ball.radius = 0.05;
    const MultipoleExpansion e = multipole_expansion(bump(), P, q, ball, 10);
    QuadOptions opt;
    opt.tol = 1e-9;
    for (const Vec& t : {Vec{12.0, 1.0, 1.0}, Vec{-9.0, 3.0, 7.0}}) {
      const double exact = localize(bump(), P, q, t, opt).value;
      const FarFieldValue v = e.far_field_eval(t, 10);
      CHECK(std::abs(v.value - exact) <= std::max(v.tail_bound, 1e-6 * std::abs(exact)) + 1e-7 * std::abs(exact));
      CHECK(std::abs(e.value(t, 10) - exact) <= 1e-4 * std::abs(exact));
    }
    CHECK_THROWS(e.far_field_eval(Vec{1.5, 1.0, 1.0}, 4));
  }

  TEST_CASE("expansion gradient against finite differences and json round trip") {
    const BumpPartition P(3, 2);
    const DyadicIndex q = dyadic_index_of(Vec{0.9, 1.1, 1.0}, 2);
    PorosityBall ball;
    ball.center = Vec{0.8, 1.2, 1.05};
    ball.radius = 0.05;
    const MultipoleExpansion e = multipole_expansion(bump(), P, q, ball, 4);
    const Vec t{1.7, 0.3, 1.4};
    const Vec g = e.gradient(t);
    const double h = 1e-5;
    for (int i = 0; i < 3; ++i) {
      Vec p = t, m = t;
      p[i] += h;
      m[i] -= h;
      CHECK(g[i] == doctest::Approx((e.value(p) - e.value(m)) / (2 * h)).epsilon(1e-6));
    }
    const MultipoleExpansion r = MultipoleExpansion::from_json(nlohmann::json::parse(e.to_json().dump()));
    CHECK(r.value(t) == doctest::Approx(e.value(t)).epsilon(1e-14));
  }

  TEST_CASE("coefficient bound ratios stay bounded for the square-root cone") {
    const Cube R0{Vec{0.0, 0.0, 0.0}, 2.0};
    const ScalarField f = radial_power_field(0.5, Vec{0.5, 0.5, 0.5}, R0);
    const BumpPartition P(3, 3);
    const DyadicIndex q = dyadic_index_of(Vec{0.55, 0.55, 0.55}, 3);
    PorosityBall ball;
    ball.center = q.cube().center();
    ball.radius = 0.02;
    const MultipoleExpansion e = multipole_expansion(f, P, q, ball, 4);
    const auto ratios = coefficient_bound_ratios(e, 1.0, std::sqrt(P.ell()));
    REQUIRE(ratios.size() == 5);
    for (double r : ratios) CHECK(r < 10.0);
  }
}
