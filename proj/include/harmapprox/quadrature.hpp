#pragma once

#include <vector>

namespace ha {

struct Rule1D {
  std::vector<double> x;  // nodes
  std::vector<double> w;  // weights
};

// Gauss-Legendre rule with n nodes on [-1, 1] (cached, thread-safe).
const Rule1D& gauss_legendre(int n);

// Gauss-Legendre rule mapped to [a, b].
Rule1D gauss_legendre(int n, double a, double b);

// Appends the mapped rule on [a, b] to an existing node list.
void append_gauss(int n, double a, double b, Rule1D& out);

}  // namespace ha
