#pragma once

#include <vector>

#include <json.hpp>

#include "harmapprox/core.hpp"
#include "harmapprox/field.hpp"
#include "harmapprox/geometry.hpp"
#include "harmapprox/kernel.hpp"
#include "harmapprox/localization.hpp"
#include "harmapprox/multiindex.hpp"
#include "harmapprox/partition.hpp"

namespace ha {

struct MomentOptions {
  int transition_nodes = 12;  // Gauss nodes on each transition panel (k +- r) of an axis
  int flat_nodes = 8;         // Gauss nodes on the plateau panel
  bool estimate_error = true;  // rerun with (transition-2, flat-2) nodes
};

// Raw moments M_alpha(z) = int Lap(phi_Q(y) (y-z)^alpha) (f(y) - f_ref) dy,
// |alpha| <= order, in the graded-lex order of MultiIndexSet(d, order).
struct CubeMoments {
  DyadicIndex cube;
  Vec center;
  int order = 0;
  double f_ref = 0;
  std::vector<double> M;
  std::vector<double> error;  // |M_hi - M_lo| per alpha (zeros when not estimated)
  std::size_t evaluations = 0;
};

// Tensor-product Gauss quadrature contracted axis by axis; the Laplacian
// touches one axis at a time, so every moment costs O(N) per axis.
CubeMoments compute_moments(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q, const Vec& z,
                            int order, const MomentOptions& opt = {});

// Exact re-centering: M_alpha(c) = sum_{beta <= alpha} binom(alpha,beta) (z-c)^{alpha-beta} M_beta(z).
std::vector<double> translate_moments(const std::vector<double>& M, int d, int order_in, const Vec& z, const Vec& c,
                                      int order_out);

// C_alpha = C_d (-1)^{|alpha|} / alpha! * M_alpha.
std::vector<double> coefficients_from_moments(const std::vector<double>& M, int d, int order);

struct FarFieldValue {
  double value = 0;
  double tail_bound = 0;
};

// Truncated multipole series sum_{|alpha| <= order} C_alpha d^alpha |t - pole|^{2-d}.
struct MultipoleExpansion {
  int d = 3;
  DyadicIndex cube;
  double ell = 0;
  Vec pole;
  int order = 0;
  std::vector<double> coef;

  double value(const Vec& t) const { return value(t, order); }
  double value(const Vec& t, int p) const;
  Vec gradient(const Vec& t) const;
  // Partial sum through order p with the geometric tail envelope of ratio
  // 4 ell d sqrt(d) / |t - pole|; rejects t inside the radius 8 ell d sqrt(d).
  FarFieldValue far_field_eval(const Vec& t, int p) const;

  nlohmann::json to_json() const;
  static MultipoleExpansion from_json(const nlohmann::json& j);
};

// C_{alpha,Q} about the porosity-ball center, computed from the value-only
// moment form (f values only).
double moment_coefficient(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                          const PorosityBall& ball, const MultiIndex& alpha, const MomentOptions& opt = {});

// Same coefficient from C_d (-1)^{|alpha|}/alpha! int phi_Q (y-c)^alpha Lap f dy;
// needs a Laplacian oracle.
double moment_coefficient_pre_parts(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                                    const Vec& c, const MultiIndex& alpha, const QuadOptions& opt = {});

// Expansion about the ball center up to order p_max (1 gives the harmonic surrogate F_Q).
MultipoleExpansion multipole_expansion(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                                       const PorosityBall& ball, int p_max, const MomentOptions& opt = {});

inline MultipoleExpansion truncated_multipole(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                                              const PorosityBall& ball, const MomentOptions& opt = {}) {
  return multipole_expansion(f, P, q, ball, 1, opt);
}

// |C_alpha| alpha! / (fnorm w(ell) (2 ell sqrt(d))^{d+|alpha|-2}), maximized per order.
std::vector<double> coefficient_bound_ratios(const MultipoleExpansion& e, double fnorm, double w_ell);

}  // namespace ha
