#include <doctest.h>

#include <cmath>

#include "harmapprox/quadrature.hpp"

using namespace ha;

TEST_SUITE("quadrature") {
  TEST_CASE("Gauss-Legendre is exact through degree 2n-1") {
    for (int n = 1; n <= 16; ++n) {
      const Rule1D& r = gauss_legendre(n);
      REQUIRE(r.x.size() == static_cast<std::size_t>(n));
      for (int k = 0; k <= 2 * n - 1; ++k) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += r.w[i] * std::pow(r.x[i], k);
        const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-13).scale(1.0));
      }
    }
  }

  TEST_CASE("degree 2n is not integrated exactly") {
    const int n = 4;
    const Rule1D& r = gauss_legendre(n);
    double s = 0;
    for (int i = 0; i < n; ++i) s += r.w[i] * std::pow(r.x[i], 2 * n);
    CHECK(std::abs(s - 2.0 / (2 * n + 1)) > 1e-4);
  }

  TEST_CASE("mapped rules and appending") {
    const Rule1D r = gauss_legendre(5, 1.0, 3.0);
    double s = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * r.x[i] * r.x[i] * r.x[i];
    CHECK(s == doctest::Approx((81.0 - 1.0) / 4));
    Rule1D acc;
    append_gauss(3, 0.0, 1.0, acc);
    append_gauss(3, 1.0, 2.0, acc);
    CHECK(acc.x.size() == 6);
    double m = 0;
    for (double w : acc.w) m += w;
    CHECK(m == doctest::Approx(2.0));
  }
}
