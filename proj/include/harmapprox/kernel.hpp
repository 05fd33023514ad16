#pragma once

#include <map>
#include <vector>

#include "harmapprox/core.hpp"
#include "harmapprox/multiindex.hpp"

namespace ha {

// Polynomial in d variables with exact 64-bit integer coefficients;
// arithmetic throws on overflow.
class IntPolynomial {
 public:
  explicit IntPolynomial(int d = 3) : d_(d) {}
  static IntPolynomial constant(int d, long long c);

  int dim() const { return d_; }
  const std::map<MultiIndex, long long>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  bool homogeneous() const;

  void add_term(const MultiIndex& e, long long c);
  IntPolynomial derivative(int i) const;
  IntPolynomial times_coord(int i) const;
  IntPolynomial times_norm2() const;  // multiply by |t|^2
  IntPolynomial scaled(long long c) const;
  IntPolynomial operator+(const IntPolynomial& o) const;
  IntPolynomial operator-(const IntPolynomial& o) const;
  double eval(const Vec& t) const;

 private:
  int d_;
  std::map<MultiIndex, long long> terms_;
};

// Numerator P_alpha with d^alpha |t|^{2-d} = P_alpha(t) / |t|^{2|alpha|+d-2}.
const IntPolynomial& kernel_polynomial(const MultiIndex& alpha, int d);

// Exact symbolic Laplacian numerator of P_alpha / |t|^m, m = 2|alpha|+d-2.
IntPolynomial kernel_laplacian_numerator(const MultiIndex& alpha, int d);

// d^alpha |t|^{2-d} through the polynomial recurrence.
double kernel_derivative(const MultiIndex& alpha, const Vec& t);

// All derivatives d^alpha |x|^{2-d}, |alpha| <= P, in one recursive sweep.
class KernelTable {
 public:
  KernelTable() = default;
  KernelTable(int d, int P);

  const MultiIndexSet& indices() const { return set_; }
  int max_order() const { return set_.max_order(); }
  // Fills out[0 .. count_upto(p)) for p <= max_order().
  void eval(const Vec& x, int p, double* out) const;

 private:
  struct Term {
    int src;
    double coef;
    int var;  // -1 for a constant factor, else multiply by x[var]
  };
  MultiIndexSet set_;
  std::vector<std::size_t> term_start_;
  std::vector<Term> terms_;
};

// Shared tables keyed by (d, P); built once, read-only afterwards.
const KernelTable& kernel_table(int d, int P);

struct KernelBoundRow {
  int order = 0;
  double max_ratio = 0;
};

// Per |alpha| = 1..alpha_max the maximum of
// |d^alpha |t|^{2-d}| / (alpha! |alpha|^{(d-1)/2} (2d/|t|)^{|alpha|+d-2}).
std::vector<KernelBoundRow> kernel_bound_audit(int alpha_max, const std::vector<Vec>& samples);

}  // namespace ha
