#include <doctest.h>

#include <cmath>

#include "harmapprox/localization.hpp"

using namespace ha;

namespace {

DyadicIndex cube_at(double x, double y, double z, int level) { return dyadic_index_of(Vec{x, y, z}, level); }

}  // namespace

TEST_SUITE("localization") {
  TEST_CASE("Newton constant") {
    CHECK(newton_constant(3) == doctest::Approx(-1.0 / (4 * M_PI)));
    const FundamentalSolution E(3);
    CHECK(E(Vec{1.0, 0.0, 0.0}) == doctest::Approx(-1.0 / (4 * M_PI)));
  }

  TEST_CASE("adaptive value matches a brute-force midpoint rule") {
    const ScalarField f = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6);
    const BumpPartition P(3, 2);
    const DyadicIndex q = cube_at(0.9, 1.1, 1.0, 2);
    for (const Vec& t : {Vec{1.9, 0.4, 1.0}, Vec{2.5, 2.5, 0.2}}) {
      const LocalizationValue v = localize(f, P, q, t);
      const double m = localize_midpoint(f, P, q, t, 100);
      CHECK(v.regime == Regime::FarSmooth);
      CHECK(std::abs(v.value - m) <= 1e-3 * std::max(std::abs(m), v.abs_integral));
    }
  }

  TEST_CASE("value-only form agrees with the form before integration by parts") {
    const ScalarField f = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6);
    const BumpPartition P(3, 2);
    const DyadicIndex q = cube_at(0.9, 1.1, 1.0, 2);
    for (const Vec& t : {Vec{0.95, 1.05, 1.0}, Vec{1.3, 1.2, 0.9}, Vec{2.0, 0.5, 1.5}}) {
      const LocalizationValue a = localize(f, P, q, t);
      const LocalizationValue b = localize_pre_parts(f, P, q, t);
      CHECK(a.converged);
      CHECK(std::abs(a.value - b.value) <= 1e-4 * (a.abs_integral + b.abs_integral));
    }
  }

  TEST_CASE("constants localize to zero and localization is linear") {
    const Cube R0{Vec{0.0, 0.0, 0.0}, 2.0};
    const ScalarField c = constant_field(3, 5.0, R0);
    const ScalarField a = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6);
    const ScalarField b = radial_power_field(0.5, Vec{0.5, 0.5, 0.5}, R0);
    const BumpPartition P(3, 2);
    const DyadicIndex q = cube_at(0.6, 0.6, 0.6, 2);
    const Vec t{0.7, 0.55, 0.62};
    CHECK(localize(c, P, q, t).value == 0.0);
    const double va = localize(a, P, q, t).value, vb = localize(b, P, q, t).value;
    const double vab = localize(combine_fields(a, 2.0, b, -1.5), P, q, t).value;
    CHECK(vab == doctest::Approx(2 * va - 1.5 * vb).epsilon(1e-4));
  }

  TEST_CASE("far field decays like a monopole with charge int phi_Q Lap f") {
    const ScalarField f = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6);
    const BumpPartition P(3, 2);
    const DyadicIndex q = cube_at(0.9, 1.1, 1.0, 2);
    const Vec c = q.cube().center();
    QuadOptions opt;
    opt.tol = 1e-8;
    // C_d int phi_Q Lap f by brute force on the support of phi_Q.
    const Box b = P.support(q);
    const int n = 60;
    double charge = 0;
    const double h[3] = {(b.hi[0] - b.lo[0]) / n, (b.hi[1] - b.lo[1]) / n, (b.hi[2] - b.lo[2]) / n};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const Vec y{b.lo[0] + (i + 0.5) * h[0], b.lo[1] + (j + 0.5) * h[1], b.lo[2] + (k + 0.5) * h[2]};
          charge += P.phi(q, y) * f.laplacian(y) * h[0] * h[1] * h[2];
        }
    charge *= newton_constant(3);
    for (double r : {40.0, 80.0}) {
      const Vec t = c + Vec{r, 0.0, 0.0};
      CHECK(localize(f, P, q, t, opt).value * r == doctest::Approx(charge).epsilon(0.03));
    }
  }

  TEST_CASE("reconstruction of a smooth bump at one point") {
    const ScalarField f = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6);
    const Cube R0{Vec{0.0, 0.0, 0.0}, 2.0};
    const Vec x{1.1, 0.9, 1.05};
    QuadOptions opt;
    opt.abs_floor = 1e-7;
    const ReconstructionResult r = reconstruct(f, R0, 2, x, opt);
    CHECK(std::abs(r.value - f(x)) <= 1e-3 * f(Vec{1.0, 1.0, 1.0}));
    CHECK(r.cubes > 0);
  }

  TEST_CASE("singular integration handles an integrable point singularity") {
    const Vec c{0.3, 0.4, 0.5};
    const Box dom{Vec{0.0, 0.0, 0.0}, Vec{1.0, 1.0, 1.0}};
    // int_{[0,1]^3} |y - c|^{-1} dy with a Duffy cube about c.
    QuadOptions opt;
    opt.tol = 1e-8;
    const IntegralResult r = integrate_singular([&](const Vec& y) { return 1.0 / dist(y, c); }, dom,
                                                {{}, {}, {}}, {c}, {0.1}, nullptr, opt);
    // Same integral split into eight boxes with the corner at c, each summed by
    // a brute-force midpoint rule on a fine grid.
    double ref = 0;
    const int n = 120;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int e = 0; e < 2; ++e) {
          const double lo[3] = {a ? c[0] : 0.0, b ? c[1] : 0.0, e ? c[2] : 0.0};
          const double hi[3] = {a ? 1.0 : c[0], b ? 1.0 : c[1], e ? 1.0 : c[2]};
          const double hx = (hi[0] - lo[0]) / n, hy = (hi[1] - lo[1]) / n, hz = (hi[2] - lo[2]) / n;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              for (int k = 0; k < n; ++k)
                ref += hx * hy * hz / dist(Vec{lo[0] + (i + 0.5) * hx, lo[1] + (j + 0.5) * hy, lo[2] + (k + 0.5) * hz}, c);
        }
    CHECK(r.value == doctest::Approx(ref).epsilon(2e-3));
  }
}
