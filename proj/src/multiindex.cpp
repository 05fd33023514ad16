#include "harmapprox/multiindex.hpp"

#include <functional>

namespace ha {

int mi_order(const MultiIndex& a, int d) {
  int s = 0;
  for (int i = 0; i < d; ++i) s += a[i];
  return s;
}

double mi_factorial(const MultiIndex& a, int d) {
  double f = 1;
  for (int i = 0; i < d; ++i)
    for (int k = 2; k <= a[i]; ++k) f *= k;
  return f;
}

std::size_t mi_count(int d, int P) {
  // binom(P + d, d)
  double c = 1;
  for (int i = 1; i <= d; ++i) c = c * (P + i) / i;
  return static_cast<std::size_t>(std::llround(c));
}

MultiIndexSet::MultiIndexSet(int d, int P) : d_(d), P_(P) {
  if (d < 1 || d > kMaxDim || P < 0) throw InvalidArgument("bad multi-index set parameters");
  start_.push_back(0);
  MultiIndex cur{};
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == d - 1) {
      cur[pos] = left;
      alpha_.push_back(cur);
      return;
    }
    for (int a = left; a >= 0; --a) {
      cur[pos] = a;
      rec(pos + 1, left - a);
    }
  };
  for (int n = 0; n <= P; ++n) {
    rec(0, n);
    start_.push_back(alpha_.size());
  }
  stride_.assign(d, 1);
  for (int i = d - 2; i >= 0; --i) stride_[i] = stride_[i + 1] * (P + 1);
  lookup_.assign(static_cast<std::size_t>(stride_[0]) * (P + 1), -1);
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    int off = 0;
    for (int k = 0; k < d; ++k) off += alpha_[i][k] * stride_[k];
    lookup_[off] = static_cast<int>(i);
    deg_.push_back(mi_order(alpha_[i], d));
    fact_.push_back(mi_factorial(alpha_[i], d));
  }
}

int MultiIndexSet::index(const MultiIndex& a) const {
  int off = 0;
  for (int k = 0; k < d_; ++k) {
    if (a[k] < 0 || a[k] > P_) return -1;
    off += a[k] * stride_[k];
  }
  return lookup_[off];
}

}  // namespace ha
