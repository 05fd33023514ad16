#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include "harmapprox/core.hpp"

namespace ha {

using MultiIndex = std::array<int, kMaxDim>;

int mi_order(const MultiIndex& a, int d);
double mi_factorial(const MultiIndex& a, int d);

// All multi-indices with |alpha| <= P in graded-lex order: by total degree,
// then lexicographically with the first component largest.
class MultiIndexSet {
 public:
  MultiIndexSet() = default;
  MultiIndexSet(int d, int P);

  int dim() const { return d_; }
  int max_order() const { return P_; }
  std::size_t size() const { return alpha_.size(); }
  const MultiIndex& operator[](std::size_t i) const { return alpha_[i]; }
  int order(std::size_t i) const { return deg_[i]; }
  double factorial(std::size_t i) const { return fact_[i]; }
  // Number of indices with |alpha| <= p.
  std::size_t count_upto(int p) const { return p < 0 ? 0 : start_[std::min(p, P_) + 1]; }
  // Position of alpha, or -1 if |alpha| > P or a component is negative.
  int index(const MultiIndex& a) const;

 private:
  int d_ = 0, P_ = 0;
  std::vector<MultiIndex> alpha_;
  std::vector<int> deg_;
  std::vector<double> fact_;
  std::vector<std::size_t> start_;
  std::vector<int> lookup_;  // dense over (P+1)^d
  std::vector<int> stride_;
};

// Number of multi-indices in d variables with |alpha| <= P.
std::size_t mi_count(int d, int P);

}  // namespace ha
