#include "harmapprox/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "harmapprox/core.hpp"

namespace ha {

namespace {

constexpr int kMaxNodes = 256;

Rule1D compute_rule(int n) {
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1, p1 = z;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1);
    double w = 2.0 / ((1 - z * z) * dp * dp);
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

const std::array<Rule1D, kMaxNodes + 1>& table() {
  static const std::array<Rule1D, kMaxNodes + 1> t = [] {
    std::array<Rule1D, kMaxNodes + 1> a;
    for (int n = 1; n <= kMaxNodes; ++n) a[n] = compute_rule(n);
    return a;
  }();
  return t;
}

}  // namespace

const Rule1D& gauss_legendre(int n) {
  if (n < 1 || n > kMaxNodes) throw InvalidArgument("Gauss-Legendre order out of range");
  return table()[n];
}

Rule1D gauss_legendre(int n, double a, double b) {
  Rule1D r;
  append_gauss(n, a, b, r);
  return r;
}

void append_gauss(int n, double a, double b, Rule1D& out) {
  const Rule1D& g = gauss_legendre(n);
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    out.x.push_back(m + h * g.x[i]);
    out.w.push_back(h * g.w[i]);
  }
}

}  // namespace ha
