#include <doctest.h>

#include <cmath>

#include "harmapprox/moduli.hpp"

using namespace ha;

TEST_SUITE("moduli") {
  TEST_CASE("power modulus values") {
    const auto w = ContinuityModulus::power(0.5);
    CHECK(w(0.25) == doctest::Approx(0.5));
    CHECK(w(0.0) == 0.0);
    CHECK_THROWS_AS(w(-1.0), InvalidArgument);
    CHECK_THROWS_AS(ContinuityModulus::power(1.5), InvalidArgument);
  }

  TEST_CASE("power_log modulus is concave and increasing") {
    const auto w = ContinuityModulus::power_log(0.5, 0.2);
    CHECK(w(0.01) == doctest::Approx(0.1 * (1 + 0.2 * std::log(100.0))));
    CHECK(concavity_defect(w, 2.0, 200) <= 1e-12);
    double prev = 0;
    for (int i = 1; i <= 100; ++i) {
      CHECK(w(i / 50.0) >= prev);
      prev = w(i / 50.0);
    }
  }

  TEST_CASE("tabulated modulus interpolates and rejects bad knots") {
    const auto w = ContinuityModulus::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 1.5});
    CHECK(w(0.5) == doctest::Approx(0.5));
    CHECK(w(1.5) == doctest::Approx(1.25));
    CHECK(w(5.0) == doctest::Approx(1.5));
    CHECK_THROWS_AS(ContinuityModulus::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 2.5}), InvalidArgument);
  }

  TEST_CASE("json round trip") {
    for (const auto& w : {ContinuityModulus::power(0.3), ContinuityModulus::power_log(0.5, 0.1)}) {
      const auto v = ContinuityModulus::from_json(w.to_json());
      for (double t : {0.001, 0.1, 0.7}) CHECK(v(t) == doctest::Approx(w(t)));
    }
  }

  TEST_CASE("doubling constant of a power modulus") {
    CHECK(doubling_constant(ContinuityModulus::power(0.5), {0.01, 0.1, 1.0}) == doctest::Approx(std::sqrt(2.0)));
  }

  TEST_CASE("seminorm of the square-root cone is at most one and approaches one") {
    const auto w = ContinuityModulus::power(0.5);
    const Vec x0{0.5, 0.5, 0.5};
    std::vector<Vec> pts;
    for (int i = 0; i <= 40; ++i) pts.push_back(x0 + Vec{i / 40.0, 0.0, 0.0});
    for (int i = 0; i < 40; ++i) pts.push_back(x0 + Vec{0.3 * std::sin(i), 0.2 * std::cos(3 * i), 0.1 * i / 40});
    const auto s = lip_seminorm([&](const Vec& x) { return std::sqrt(dist(x, x0)); }, pts, w);
    CHECK(s.value <= 1.0 + 1e-12);
    CHECK(s.value >= 0.999);
    CHECK(s.exact);
  }

  TEST_CASE("seminorm of a constant is zero and scales linearly") {
    const auto w = ContinuityModulus::power(0.5);
    std::vector<Vec> pts{Vec{0.0, 0.0, 0.0}, Vec{0.1, 0.0, 0.0}, Vec{0.0, 0.3, 0.2}};
    CHECK(lip_seminorm(std::vector<Vec>(pts), {2.0, 2.0, 2.0}, w).value == 0.0);
    const double a = lip_seminorm(pts, {0.0, 1.0, 0.5}, w).value;
    const double b = lip_seminorm(pts, {0.0, 3.0, 1.5}, w).value;
    CHECK(b == doctest::Approx(3 * a));
  }
}
