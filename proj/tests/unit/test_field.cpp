#include <doctest.h>

#include <cmath>

#include "harmapprox/field.hpp"

using namespace ha;

namespace {

double fd_laplacian(const ScalarField& f, const Vec& x, double h) {
  double s = -2.0 * f.d * f(x);
  for (int i = 0; i < f.d; ++i) {
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    s += f(p) + f(m);
  }
  return s / (h * h);
}

Vec fd_gradient(const ScalarField& f, const Vec& x, double h) {
  Vec g(f.d);
  for (int i = 0; i < f.d; ++i) {
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("field") {
  TEST_CASE("polynomial step endpoints, symmetry and derivatives") {
    CHECK(smooth_step(-0.5) == 0.0);
    CHECK(smooth_step(0.0) == 0.0);
    CHECK(smooth_step(1.0) == doctest::Approx(1.0));
    CHECK(smooth_step(1.5) == 1.0);
    CHECK(smooth_step(0.5) == doctest::Approx(0.5));
    for (double u : {0.1, 0.37, 0.8}) {
      CHECK(smooth_step(u) + smooth_step(1 - u) == doctest::Approx(1.0));
      const double h = 1e-5;
      CHECK(smooth_step(u, 1) == doctest::Approx((smooth_step(u + h) - smooth_step(u - h)) / (2 * h)).epsilon(1e-6));
      CHECK(smooth_step(u, 2) == doctest::Approx((smooth_step(u + h, 1) - smooth_step(u - h, 1)) / (2 * h)).epsilon(1e-6));
    }
  }

  TEST_CASE("standard cutoff plateau and support") {
    const Cube R0{Vec{0.0, 0.0, 0.0}, 2.0};
    const PlateauCutoff c = standard_cutoff(R0);
    CHECK(c.value(Vec{1.0, 1.0, 1.0}) == 1.0);
    CHECK(c.value(Vec{0.3, 1.7, 1.0}) == 1.0);
    CHECK(c.value(Vec{0.01, 1.0, 1.0}) == 0.0);
    const Box s = c.support();
    CHECK(s.lo[0] == doctest::Approx(2.0 / 32));
    CHECK(s.hi[0] == doctest::Approx(2.0 - 2.0 / 32));
  }

  TEST_CASE("radial power oracles agree with finite differences") {
    const Cube R0{Vec{0.0, 0.0, 0.0}, 2.0};
    const ScalarField f = radial_power_field(0.5, Vec{0.5, 0.5, 0.5}, R0);
    for (const Vec& x : {Vec{0.9, 0.7, 1.1}, Vec{0.15, 1.0, 1.0}, Vec{1.2, 1.85, 0.6}}) {
      const Vec g = f.gradient(x), gf = fd_gradient(f, x, 1e-5);
      for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(gf[i]).epsilon(1e-5));
      const double rich = (4 * fd_laplacian(f, x, 1e-3) - fd_laplacian(f, x, 2e-3)) / 3;
      CHECK(f.laplacian(x) == doctest::Approx(rich).epsilon(1e-5));
    }
    CHECK(f(Vec{0.5, 0.5, 0.5}) == 0.0);
    CHECK(f(Vec{1.5, 0.5, 0.5}) == doctest::Approx(1.0));
  }

  TEST_CASE("smooth bump oracles and support") {
    const ScalarField f = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6, 2.0);
    CHECK(f(Vec{1.0, 1.0, 1.0}) == doctest::Approx(2.0 * std::exp(-1.0)));
    CHECK(f(Vec{1.7, 1.0, 1.0}) == 0.0);
    const Vec x{1.2, 0.9, 1.1};
    CHECK(f.laplacian(x) == doctest::Approx(fd_laplacian(f, x, 1e-3)).epsilon(1e-4));
  }

  TEST_CASE("combinations carry the oracles") {
    const Cube R0{Vec{0.0, 0.0, 0.0}, 2.0};
    const ScalarField a = radial_power_field(0.5, Vec{0.5, 0.5, 0.5}, R0);
    const ScalarField b = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6);
    const ScalarField c = combine_fields(a, 2.0, b, -3.0);
    const Vec x{0.8, 1.1, 0.9};
    CHECK(c(x) == doctest::Approx(2 * a(x) - 3 * b(x)));
    CHECK(c.laplacian(x) == doctest::Approx(2 * a.laplacian(x) - 3 * b.laplacian(x)));
    CHECK(scaled_field(a, 4.0)(x) == doctest::Approx(4 * a(x)));
  }

  TEST_CASE("mollifier mass and sup distance for the square-root cone") {
    const double e12 = std::abs(mollifier_discrete_mass(3, 12) - 1);
    CHECK(e12 < 1e-3);
    CHECK(std::abs(mollifier_discrete_mass(3, 24) - 1) < e12);
    const Cube R0{Vec{0.0, 0.0, 0.0}, 2.0};
    const Vec x0{0.5, 0.5, 0.5};
    const ScalarField f = radial_power_field(0.5, x0, R0);
    const double eps = 0.05;
    const ScalarField g = mollify(f, eps);
    for (const Vec& x : {x0, Vec{0.52, 0.5, 0.49}, Vec{0.9, 0.8, 0.7}})
      CHECK(std::abs(g(x) - f(x)) <= std::sqrt(eps));
  }

  TEST_CASE("Whitney extension interpolates the samples") {
    const PorousCompact K = generate_cantor_dust(3, 6, 1.0 / 3.0, 3);
    const Vec x0{0.5, 0.5, 0.5};
    std::vector<double> vals;
    for (const auto& s : K.samples) vals.push_back(std::sqrt(dist(s, x0)));
    const WhitneyExtension w = whitney_extend(K.samples, vals, K);
    for (std::size_t i = 0; i < K.samples.size(); i += 29) CHECK(w.field(K.samples[i]) == doctest::Approx(vals[i]));
    CHECK(w.field(Vec{0.01, 0.01, 0.01}) == 0.0);
  }

  TEST_CASE("field descriptors") {
    const PorousCompact K = generate_cantor_dust(3, 6, 1.0 / 3.0, 3);
    const ScalarField f = field_from_json({{"kind", "radial_power"}, {"s", 0.5}, {"x0", {0.5, 0.5, 0.5}}}, K);
    CHECK(f(Vec{1.5, 0.5, 0.5}) == doctest::Approx(1.0));
    const ScalarField c = field_from_json({{"kind", "constant"}, {"value", 3.0}}, K);
    CHECK(c(Vec{1.0, 1.0, 1.0}) == 3.0);
    CHECK_THROWS_AS(field_from_json({{"kind", "nope"}}, K), InvalidArgument);
  }
}
