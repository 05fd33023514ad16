#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "harmapprox/core.hpp"
#include "harmapprox/field.hpp"
#include "harmapprox/geometry.hpp"
#include "harmapprox/localization.hpp"
#include "harmapprox/moduli.hpp"
#include "harmapprox/multipole.hpp"
#include "harmapprox/partition.hpp"

namespace ha {

struct ApproximantOptions {
  MomentOptions moments{10, 6, true};
  // Order of the per-cube center expansions of V_{phi_Q} f, used for the
  // far-pole part of the error split.
  int center_order = 6;
  // Gauss nodes per axis on a band panel (n-1 for the estimate).
  int band_nodes = 8;
  // Expansion orders of the band layer potential on leaf boxes and clusters.
  int leaf_order = 10;
  int cluster_order = 12;
  // Truncation target q^(p+1) of an accepted expansion.
  double expansion_tol = 1e-7;
  // Points served by one evaluation context lie within valid_radius * ell of its anchor.
  double valid_radius = 0.75;
  // Light builds skip the band layer and keep low-order center expansions
  // (shell diagnostics at fine levels).
  bool light = false;
  int light_order = 3;
};

// One node of the band tree: a band box (leaf) or a cluster of them.
struct BandNode {
  Vec center;
  double radius = 0;
  int order = 0;
  std::size_t coef = 0, err = 0;  // offsets into band_coef / band_err
  int child_begin = 0, child_end = 0;
  int box = -1;  // leaf box index, -1 for clusters
};

// Panel box of the band layer with the cubes of D' active on it.
struct BandBox {
  Vec lo, hi;
  std::array<long long, kMaxDim> cell0{};  // first active cell index per axis
  std::array<int, kMaxDim> cells{};        // 1 or 2 active cells per axis
  std::vector<std::array<unsigned char, kMaxDim>> in_dprime;  // per-axis offsets of active cubes in D'
};

// G = f - sum_{Q in D'} (V_{phi_Q} f - F_Q) at level j. On K_delta,
// Phi = sum_{D'} phi_Q equals 1, and f - sum V equals the layer potential
//   -C_d int [E0(t-y) Lap Phi(y) + 2 grad_y E0(t-y) . grad Phi(y)] f(y) dy
// supported where Phi is not locally constant (the band).
struct HarmonicApproximant {
  int d = 3;
  int level = 0;
  double ell = 0, delta = 0;
  double porosity = 0;  // effective constant c' of the ball search
  PorousCompact K;
  ScalarField f;
  ApproximantOptions opt;

  std::vector<DyadicIndex> cubes;  // D'_{j,K}
  std::unordered_map<DyadicIndex, int, DyadicHash> index;
  std::vector<PorosityBall> balls;
  std::vector<Vec> centers;
  std::vector<MultipoleExpansion> F;     // order-1 expansions about the ball centers
  std::vector<double> F_err;             // quadrature error per F coefficient, stride d+1
  int acc_order = 0;
  std::size_t acc_stride = 0;
  std::vector<double> acc_coef, acc_err;  // center expansions, stride acc_stride
  double support_radius = 0;              // max |y - center| over supp phi_Q

  std::vector<BandBox> band_boxes;
  std::vector<BandNode> band;  // leaves first (index = box), then clusters bottom up
  std::vector<int> band_children, band_roots;
  std::vector<double> band_coef, band_err;

  double build_seconds = 0;
  std::size_t evaluations = 0;

  BumpPartition partition() const { return BumpPartition(d, level); }
  // Cubes, balls and expansions; the band layer is recomputed on load.
  nlohmann::json to_json() const;
};

// Rebuilds an approximant from its serialization and the base field.
HarmonicApproximant approximant_from_json(const nlohmann::json& j, const PorousCompact& K, const ScalarField& f);

// Computes D'_{j,K}, porosity balls, F_Q and the center expansions. Any
// ball-search failure propagates as BallSearchFailure naming the cube.
HarmonicApproximant build_approximant(const ScalarField& f, const PorousCompact& K, int level,
                                      const ApproximantOptions& opt = {});

// Precomputed state for evaluations near one anchor t0: band boxes close to
// t0 are summed node by node, the rest of the band tree through expansions
// of fixed order. All points served by a context see the same nodes and
// expansions, so G restricted to the context is exactly harmonic.
class EvalContext {
 public:
  EvalContext(const HarmonicApproximant& G, const Vec& t0);

  bool covers(const Vec& t) const;
  double value(const Vec& t, double* error = nullptr) const;
  Vec gradient(const Vec& t) const;
  const Vec& anchor() const { return t0_; }
  std::size_t direct_boxes() const { return direct_boxes_; }
  std::size_t direct_nodes() const { return bA_.size(); }
  std::size_t expansions() const { return accepted_.size(); }

 private:
  const HarmonicApproximant* G_;
  Vec t0_;
  std::vector<int> accepted_, accepted_order_;  // band tree nodes used through expansions
  std::vector<double> by_, bA_, bB_;           // direct band nodes, weighted Lap and grad parts
  double band_err_ = 0;
  std::size_t direct_boxes_ = 0;
};

struct PointValue {
  Vec point;
  double value = 0, error = 0;
  Vec grad;
};

// Single-point convenience wrappers; each builds its own context.
double evaluate(const HarmonicApproximant& G, const Vec& t, double* error = nullptr);
Vec gradient(const HarmonicApproximant& G, const Vec& t);

// Evaluates many points, one context per level-(j+1) cell; parallel over cells.
std::vector<PointValue> evaluate_batch(const HarmonicApproximant& G, const std::vector<Vec>& pts, bool with_gradient);

struct ErrorReport {
  double sup_error = 0, jackson_ratio = 0;
  Vec argmax;
  double max_error_estimate = 0;
  std::size_t points = 0;
  double i1 = 0, i2 = 0;  // max |I1|, |I2| over the points
};

ErrorReport sup_error(const HarmonicApproximant& G, const std::vector<Vec>& pts, double fnorm,
                      const ContinuityModulus& w);

struct NeighborhoodGrid {
  double delta = 0, spacing = 0;
  std::vector<Vec> points;
};

// Lattice of the given spacing in cubes of half-width `radius` about each
// anchor, keeping points with dist_oracle + 2 eta < limit.
NeighborhoodGrid neighborhood_grid(const PorousCompact& K, double limit, double spacing, double radius,
                                   const std::vector<Vec>& anchors);

struct GradientReport {
  double sup_gradient = 0, bernstein_ratio = 0;
  Vec argmax;
  std::size_t points = 0;
};

GradientReport sup_gradient(const HarmonicApproximant& G, const NeighborhoodGrid& grid, double fnorm,
                            const ContinuityModulus& w);

struct HarmonicityReport {
  double residual = 0;  // max |Lap_h G| / S4 over the grid
  std::size_t used = 0, skipped = 0;
};

// (2d+1)-point Laplacian at step h normalized by the fourth-difference
// scale S4 measured at the fixed step h0; stencils that leave K_delta are skipped.
HarmonicityReport harmonicity_residual(const HarmonicApproximant& G, const NeighborhoodGrid& grid, double h, double h0);

struct ShellRow {
  int k = 0;
  std::size_t count = 0;
  double sum = 0, abs_sum = 0;
  double covering_bound = 0;  // 3^d C_lambda (2^{k+2} d sqrt d)^lambda
};

struct SplittingDiagnostics {
  double I1 = 0, I2 = 0;
  std::size_t n1 = 0, n2 = 0;
  std::vector<ShellRow> shells;
};

// I1/I2 split of f(t) - G(t) by |t - pole| against 8 ell d sqrt(d) with the
// dyadic shell table of the far part. I1 comes from f - G - I2 and is left at
// zero for light builds.
SplittingDiagnostics splitting_diagnostics(const HarmonicApproximant& G, const Vec& t, double lambda,
                                           double C_lambda);

struct RepresentationCheck {
  double subtraction = 0, direct = 0;  // f - sum(V - F) versus O_ell + F_ell
  double subtraction_error = 0, direct_error = 0;
  std::size_t far_cubes = 0;
};

// O_ell summed by direct localization over D_j(R_0) minus D' (small levels only).
RepresentationCheck representation_check(const HarmonicApproximant& G, const Vec& t, const QuadOptions& opt = {});

struct FamilyLevel {
  int level = 0;
  double delta = 0, sup_error = 0, sup_gradient = 0;
};

struct Certificate {
  double bound = 0;      // certified seminorm
  double C1 = 0, C2 = 0;  // sup_error <= C1 w(delta), sup_grad <= C2 w(delta)/delta
  double direct_on_pairs = 0;  // max |f(x)-f(y)|/w(|x-y|) over the same pairs
  std::size_t pairs_used = 0, pairs_skipped = 0;
};

// Sufficiency certificate: for each pair, |f(x)-f(y)| <= 2 C1 w(delta) + C2 (w(delta)/delta)|x-y|
// with delta from the family levels in [|x-y|/2, 2|x-y|] (the best of them);
// pairs with no such level are skipped.
Certificate certify_lip_from_family(const std::vector<FamilyLevel>& family, const ContinuityModulus& w,
                                    const std::vector<Vec>& pts, const std::vector<double>& vals,
                                    double C1_scale = 1.0, double C2_scale = 1.0);

// Deterministic subset of the samples: a stride subsample capped at `cap`
// plus the `near_hint` samples closest to each hint.
std::vector<Vec> select_samples(const PorousCompact& K, std::size_t cap, const std::vector<Vec>& hints,
                                std::size_t near_hint);

}  // namespace ha
