#include <doctest.h>

#include <cmath>
#include <random>

#include "harmapprox/kernel.hpp"

using namespace ha;

namespace {

MultiIndex mi(int a, int b, int c) {
  MultiIndex m{};
  m[0] = a;
  m[1] = b;
  m[2] = c;
  return m;
}

}  // namespace

TEST_SUITE("kernel") {
  TEST_CASE("closed forms of low derivatives") {
    const Vec t{2.0, 0.0, 0.0};
    CHECK(kernel_derivative(mi(0, 0, 0), t) == doctest::Approx(0.5));
    // d_1 |t|^-1 = -t_1 / |t|^3
    CHECK(kernel_derivative(mi(1, 0, 0), t) == doctest::Approx(-0.25));
    const Vec s{0.3, -1.2, 0.7};
    const double r = s.norm();
    // d_1 d_2 |t|^-1 = 3 t_1 t_2 / |t|^5
    CHECK(kernel_derivative(mi(1, 1, 0), s) == doctest::Approx(3 * s[0] * s[1] / std::pow(r, 5)));
    // d_3^2 |t|^-1 = (3 t_3^2 - |t|^2) / |t|^5
    CHECK(kernel_derivative(mi(0, 0, 2), s) == doctest::Approx((3 * s[2] * s[2] - r * r) / std::pow(r, 5)));
  }

  TEST_CASE("derivatives agree with central differences") {
    const Vec t{0.9, 0.4, -0.6};
    const double h = 1e-4;
    for (const auto& a : {mi(0, 0, 0), mi(2, 1, 0), mi(1, 1, 1), mi(0, 3, 1)}) {
      for (int i = 0; i < 3; ++i) {
        MultiIndex b = a;
        ++b[i];
        Vec p = t, m = t;
        p[i] += h;
        m[i] -= h;
        const double fd = (kernel_derivative(a, p) - kernel_derivative(a, m)) / (2 * h);
        CHECK(kernel_derivative(b, t) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("recursive table matches the polynomial recurrence") {
    const KernelTable& T = kernel_table(3, 8);
    std::vector<double> out(T.indices().size());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
      const Vec x{u(rng), u(rng), u(rng) + 5.0};
      T.eval(x, 8, out.data());
      for (std::size_t i = 0; i < T.indices().size(); ++i)
        CHECK(out[i] == doctest::Approx(kernel_derivative(T.indices()[i], x)).epsilon(1e-10));
    }
  }

  TEST_CASE("homogeneity of degree 2 - d - |alpha|") {
    const Vec t{0.7, -0.3, 1.1};
    for (const auto& a : {mi(0, 0, 0), mi(1, 2, 0), mi(3, 0, 2)}) {
      const int n = a[0] + a[1] + a[2];
      for (double s : {0.5, 3.0})
        CHECK(kernel_derivative(a, s * t) == doctest::Approx(std::pow(s, -1 - n) * kernel_derivative(a, t)).epsilon(1e-12));
    }
  }

  TEST_CASE("numerators are homogeneous and every derivative is harmonic") {
    const MultiIndexSet S(3, 6);
    for (std::size_t i = 0; i < S.size(); ++i) {
      const IntPolynomial& p = kernel_polynomial(S[i], 3);
      CHECK(p.homogeneous());
      CHECK(p.degree() == S.order(i));
      CHECK(kernel_laplacian_numerator(S[i], 3).is_zero());
    }
  }

  TEST_CASE("Laplacian numerator detects a non-harmonic function") {
    IntPolynomial p(3);
    p.add_term(mi(2, 0, 0), 1);
    const IntPolynomial q = p.derivative(0).derivative(0);
    CHECK(q.eval(Vec{1.0, 2.0, 3.0}) == doctest::Approx(2.0));
    CHECK_FALSE(q.is_zero());
  }

  TEST_CASE("bound audit stays below the envelope") {
    std::vector<Vec> samples;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 100; ++i) samples.push_back(Vec{n(rng), n(rng), n(rng)});
    for (const auto& row : kernel_bound_audit(8, samples)) CHECK(row.max_ratio <= 1.0);
  }

  TEST_CASE("multi-index bookkeeping") {
    const MultiIndexSet S(3, 4);
    CHECK(S.size() == mi_count(3, 4));
    CHECK(mi_count(3, 4) == 35);
    CHECK(S.count_upto(1) == 4);
    for (std::size_t i = 0; i < S.size(); ++i) CHECK(S.index(S[i]) == static_cast<int>(i));
    CHECK(S.index(mi(5, 0, 0)) == -1);
    CHECK(mi_factorial(mi(2, 3, 0), 3) == doctest::Approx(12.0));
  }
}
