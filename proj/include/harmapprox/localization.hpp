#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "harmapprox/core.hpp"
#include "harmapprox/field.hpp"
#include "harmapprox/geometry.hpp"
#include "harmapprox/moduli.hpp"
#include "harmapprox/partition.hpp"

namespace ha {

// E(t) = C_d |t|^{2-d}, the Newtonian kernel with E * Delta g = g.
struct FundamentalSolution {
  int d = 3;
  double C = 0;

  explicit FundamentalSolution(int dim = 3) : d(dim), C(newton_constant(dim)) {}
  double operator()(const Vec& t) const { return C * std::pow(t.norm(), 2 - d); }
  Vec gradient(const Vec& t) const;
};

// Quadrature controls shared by every singular or smooth volume integral.
struct QuadOptions {
  int box_nodes = 6;       // Gauss nodes per axis on a smooth panel (doubled for the estimate)
  int radial_nodes = 8;    // radial nodes on a Duffy pyramid
  int angular_nodes = 4;   // nodes per face coordinate on a Duffy pyramid
  double tol = 1e-4;       // target: error estimate <= tol * integral of |integrand|
  int max_regions = 6000;  // adaptive subdivision budget
  double abs_floor = 0;    // absolute error accepted regardless of tol
};

enum class Regime { FarSmooth, NearSingular };

struct LocalizationValue {
  DyadicIndex cube;
  Vec point;
  double value = 0;
  Regime regime = Regime::FarSmooth;
  double error_estimate = 0;
  double abs_integral = 0;  // integral of |integrand|, the scale of the estimate
  std::size_t evaluations = 0;
  bool converged = true;
};

// Result of one adaptive volume integral.
struct IntegralResult {
  double value = 0, error = 0, abs = 0;
  std::size_t evaluations = 0;
  bool converged = true;
};

// Adaptive cubature of g over `domain`. Panels are cut at the per-axis
// breakpoints; every point in `centers` gets its own cube of half-width
// `half_widths[k]` integrated by a Duffy pyramid rule about the point, which
// absorbs weak singularities there. Panels for which `skip(lo, hi)` returns
// true carry an identically vanishing integrand and are dropped.
IntegralResult integrate_singular(const std::function<double(const Vec&)>& g, const Box& domain,
                                  std::vector<std::vector<double>> breakpoints, const std::vector<Vec>& centers,
                                  const std::vector<double>& half_widths,
                                  const std::function<bool(const Vec&, const Vec&)>& skip, const QuadOptions& opt);

// V_{phi_Q} f(t) through the value-only form
//   C_d int [E0(t-y) Lap phi_Q(y) + 2 grad_y E0(t-y) . grad phi_Q(y)] (f(y) - f(t)) dy,
// E0 = |.|^{2-d}. Far regime when dist(t, 2Q) > ell/4, otherwise t and the
// singular points of f receive Duffy cubes.
LocalizationValue localize(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q, const Vec& t,
                           const QuadOptions& opt = {});

// C_d int E0(t-y) phi_Q(y) Lap f(y) dy, the form before integration by parts.
// Needs a Laplacian oracle; used as an independent cross-check.
LocalizationValue localize_pre_parts(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                                     const Vec& t, const QuadOptions& opt = {});

// Brute-force midpoint rule of the value-only integrand on n^d cells of supp phi_Q.
double localize_midpoint(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q, const Vec& t, int n);

// Cubes of D_j(R_0) whose double meets supp f (all of D_j(R_0) for unbounded support).
std::vector<DyadicIndex> cubes_touching_support(const ScalarField& f, const Cube& R0, int level);

struct ReconstructionResult {
  double value = 0;
  double error_estimate = 0;
  std::size_t cubes = 0;
};

// sum_Q V_{phi_Q} f(x) over the cubes whose double meets supp f.
ReconstructionResult reconstruct(const ScalarField& f, const Cube& R0, int level, const Vec& x,
                                 const QuadOptions& opt = {});

struct SizeAuditRow {
  int level = 0;
  double max_ratio = 0;  // max |V| / (fnorm * w(ell))
  DyadicIndex argmax_cube;
  Vec argmax_point;
  std::size_t cubes = 0, evaluations = 0;
  double max_error_estimate = 0;
};

// max over the given cubes and a 3^d net over each 2Q (plus `extra` points
// inside 2Q) of |V_{phi_Q} f| / (fnorm * w(ell)).
SizeAuditRow localization_size_audit(const ScalarField& f, double fnorm, const ContinuityModulus& w, int level,
                                     const std::vector<DyadicIndex>& cubes, const std::vector<Vec>& extra,
                                     const QuadOptions& opt = {});

}  // namespace ha
