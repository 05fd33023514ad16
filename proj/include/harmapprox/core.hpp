#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace ha {

inline constexpr int kMaxDim = 6;

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed-capacity point; keeps hot loops free of heap traffic.
struct Vec {
  std::array<double, kMaxDim> v{};
  int d = 0;

  Vec() = default;
  explicit Vec(int dim, double fill = 0.0) : d(dim) {
    if (dim < 1 || dim > kMaxDim) throw InvalidArgument("dimension out of range");
    v.fill(0.0);
    for (int i = 0; i < dim; ++i) v[i] = fill;
  }
  Vec(std::initializer_list<double> xs) : d(static_cast<int>(xs.size())) {
    if (d < 1 || d > kMaxDim) throw InvalidArgument("dimension out of range");
    int i = 0;
    for (double x : xs) v[i++] = x;
  }
  static Vec from(const std::vector<double>& xs) {
    Vec r(static_cast<int>(xs.size()));
    for (int i = 0; i < r.d; ++i) r.v[i] = xs[i];
    return r;
  }
  std::vector<double> to_vector() const { return {v.begin(), v.begin() + d}; }

  int dim() const { return d; }
  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  Vec& operator+=(const Vec& o) { for (int i = 0; i < d; ++i) v[i] += o.v[i]; return *this; }
  Vec& operator-=(const Vec& o) { for (int i = 0; i < d; ++i) v[i] -= o.v[i]; return *this; }
  Vec& operator*=(double s) { for (int i = 0; i < d; ++i) v[i] *= s; return *this; }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }

  double dot(const Vec& o) const { double s = 0; for (int i = 0; i < d; ++i) s += v[i] * o.v[i]; return s; }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  double max_abs() const { double m = 0; for (int i = 0; i < d; ++i) m = std::max(m, std::abs(v[i])); return m; }
};

inline double dist(const Vec& a, const Vec& b) { return (a - b).norm(); }

// Unit-sphere surface area in R^d.
double sphere_area(int d);

// Newtonian normalization: E(t) = C_d |t|^{2-d} solves Delta E = delta.
double newton_constant(int d);

}  // namespace ha
