#include <doctest.h>

#include <cmath>
#include <random>

#include "harmapprox/partition.hpp"

using namespace ha;

TEST_SUITE("partition") {
  TEST_CASE("partition sums to one at every level") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 3.0);
    for (int j = 0; j <= 5; ++j) {
      const BumpPartition P(3, j);
      for (int i = 0; i < 200; ++i) {
        const Vec x{u(rng), u(rng), u(rng)};
        double s = 0;
        for (const auto& q : P.active_cubes(x)) s += P.phi(q, x);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(P.sum_at(x) == doctest::Approx(1.0).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("support and range of a single phi_Q") {
    const BumpPartition P(3, 2);
    DyadicIndex q;
    q.level = 2;
    q.d = 3;
    q.k[0] = 3;
    q.k[1] = 1;
    q.k[2] = 4;
    const Box b = P.support(q);
    const double r = P.r() * P.ell();
    CHECK(b.lo[0] == doctest::Approx(0.75 - r));
    CHECK(b.hi[2] == doctest::Approx(1.25 + r));
    CHECK(P.phi(q, q.cube().center()) == doctest::Approx(1.0));
    CHECK(P.phi(q, Vec{b.lo[0] - 1e-9, 0.4, 1.1}) == 0.0);
    CHECK(P.phi(q, Vec{b.hi[0] + 1e-9, 0.4, 1.1}) == 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
      Vec x(3);
      for (int a = 0; a < 3; ++a) x[a] = b.lo[a] + (b.hi[a] - b.lo[a]) * u(rng);
      const double v = P.phi(q, x);
      CHECK(v >= -1e-15);
      CHECK(v <= 1.0 + 1e-15);
    }
  }

  TEST_CASE("gradient and Laplacian against finite differences") {
    const BumpPartition P(3, 3);
    const DyadicIndex q = dyadic_index_of(Vec{1.01, 0.49, 0.76}, 3);
    const double h = 1e-5;
    for (const Vec& x : {Vec{1.0 + 0.01, 0.49, 0.76}, Vec{0.99, 0.5, 0.74}, Vec{1.06, 0.43, 0.8}}) {
      const Vec g = P.grad_phi(q, x);
      double lap = 0;
      for (int i = 0; i < 3; ++i) {
        Vec p = x, m = x;
        p[i] += h;
        m[i] -= h;
        CHECK(g[i] == doctest::Approx((P.phi(q, p) - P.phi(q, m)) / (2 * h)).epsilon(1e-6));
        const Vec gp = P.grad_phi(q, p), gm = P.grad_phi(q, m);
        lap += (gp[i] - gm[i]) / (2 * h);
      }
      CHECK(P.lap_phi(q, x) == doctest::Approx(lap).epsilon(1e-5));
      Vec ga(3);
      double la = 0;
      CHECK(P.phi_all(q, x, ga, la) == doctest::Approx(P.phi(q, x)));
      CHECK(la == doctest::Approx(P.lap_phi(q, x)));
    }
  }

  TEST_CASE("psi derivatives are consistent") {
    const BumpPartition P(3, 0);
    const double h = 1e-5;
    for (double s : {-0.2, 0.05, 0.5, 0.93, 1.1}) {
      for (int k = 0; k < 4; ++k)
        CHECK(P.psi(s, k + 1) == doctest::Approx((P.psi(s + h, k) - P.psi(s - h, k)) / (2 * h)).epsilon(1e-5));
      double v, d1, d2;
      P.psi012(s, v, d1, d2);
      CHECK(v == doctest::Approx(P.psi(s)));
      CHECK(d2 == doctest::Approx(P.psi(s, 2)));
    }
  }

  TEST_CASE("derivative bounds do not depend on the level") {
    const auto b0 = BumpPartition(3, 1).derivative_bounds();
    const auto b1 = BumpPartition(3, 6).derivative_bounds();
    REQUIRE(b0.size() == b1.size());
    CHECK(b0[0] == doctest::Approx(1.0));
    for (std::size_t k = 0; k < b0.size(); ++k) CHECK(b0[k] == doctest::Approx(b1[k]).epsilon(1e-9));
  }
}
