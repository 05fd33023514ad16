#pragma once

#include <vector>

#include "harmapprox/core.hpp"
#include "harmapprox/geometry.hpp"
#include "harmapprox/multiindex.hpp"

namespace ha {

// exp(-1/(1-x^2)) on (-1,1) and its first three derivatives.
double exp_bump(double x, int k = 0);
// exp(-1/(1-u)) on u < 1 as a function of u = |x|^2, derivatives up to 2.
double exp_bump_sq(double u, int k = 0);

// Dyadic partition of unity phi_Q(x) = prod_i Psi(2^j x_i - k_i) with
// Psi(s) = H(s) - H(s-1), H the primitive of the 1D polynomial bump
// (1-(x/r)^2)^6 of half-width r = 0.49/sqrt(d). The base bump prod_i psi(x_i)
// is C^6, sits in the ball of radius 1/2, and phi_Q equals the integral of
// its translates over Q. Being piecewise polynomial, phi_Q is integrated
// exactly by Gauss rules on the panels cut at k +- r.
class BumpPartition {
 public:
  BumpPartition() = default;
  BumpPartition(int d, int level);

  int dim() const { return d_; }
  int level() const { return level_; }
  double ell() const { return ell_; }
  // Half-width of a transition zone, in cell units.
  double r() const { return r_; }

  // Psi^{(k)}(s) in cell coordinates, k = 0..4.
  double psi(double s, int k = 0) const;
  // psi(s,0), psi(s,1), psi(s,2) together.
  void psi012(double s, double& v, double& d1, double& d2) const;

  double phi(const DyadicIndex& q, const Vec& x) const;
  Vec grad_phi(const DyadicIndex& q, const Vec& x) const;
  double lap_phi(const DyadicIndex& q, const Vec& x) const;
  // Value, gradient and Laplacian of phi_Q in one pass over the axes.
  double phi_all(const DyadicIndex& q, const Vec& x, Vec& grad, double& lap) const;
  // Support box of phi_Q: Q widened by r*ell on every side.
  Box support(const DyadicIndex& q) const;
  // Sum of phi_Q over the (at most 2^d) cubes whose support contains x.
  double sum_at(const Vec& x) const;
  // Cubes whose support contains x.
  std::vector<DyadicIndex> active_cubes(const Vec& x) const;

  // C_k = ell^k max_{|beta|=k} sup |d^beta phi_Q|, k = 0..4 (level independent).
  std::vector<double> derivative_bounds() const;

 private:
  int d_ = 3, level_ = 0;
  double ell_ = 1, r_ = 0;
};

// Per-axis cell indices whose transition or core contains coordinate x.
void active_cells_1d(double x, double ell, double r, long long& k0, long long& k1);

}  // namespace ha
