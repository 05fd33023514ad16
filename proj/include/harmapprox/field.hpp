#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harmapprox/core.hpp"
#include "harmapprox/geometry.hpp"
#include "harmapprox/moduli.hpp"

namespace ha {

enum class Smoothness { Analytic, Whitney, Mollified };

struct ScalarField {
  int d = 3;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;     // optional
  std::function<double(const Vec&)> laplacian;  // optional
  Box support;                                  // values vanish outside
  Smoothness tag = Smoothness::Analytic;
  // Points where derivatives may blow up; quadrature uses them as breakpoints.
  std::vector<Vec> singular_points;
  // Per-axis coordinates across which f is only finitely smooth; quadrature
  // panels are cut there.
  std::vector<std::vector<double>> axis_breaks;
  nlohmann::json descriptor;

  double operator()(const Vec& x) const { return value(x); }
  bool has_gradient() const { return static_cast<bool>(gradient); }
  bool has_laplacian() const { return static_cast<bool>(laplacian); }
  // Analytic gradient when present, central differences otherwise.
  Vec grad_or_fd(const Vec& x, double h) const;
};

// Polynomial step rising from 0 at u <= 0 to 1 at u >= 1, C^4 across both
// ends; k selects the derivative (k <= 2).
double smooth_step(double u, int k = 0);

// prod_i chi(x_i) with chi = 1 on [lo+inner, hi-inner] and 0 outside
// [lo+outer, hi-outer]; outer < inner.
struct PlateauCutoff {
  Vec lo, hi;
  double inner = 0, outer = 0;
  double value(const Vec& x) const;
  // value, gradient and Laplacian together
  double eval(const Vec& x, Vec* grad, double* lap) const;
  Box support() const;
  // Per-axis coordinates where the polynomial transitions start and end.
  std::vector<std::vector<double>> breaks() const;
};

// Cutoff equal to 1 on the edge/8-neighbourhood margin of R_0 and vanishing
// within edge/32 of its boundary.
PlateauCutoff standard_cutoff(const Cube& R0);

// --- test-function library -------------------------------------------------

ScalarField constant_field(int d, double c, const Cube& R0);
// a.x + b on all of R^d (harmonic, not compactly supported); R0 is unused
ScalarField linear_field(const Vec& a, double b, const Cube& R0);
// cutoff(x) |x - x0|^s
ScalarField radial_power_field(double s, const Vec& x0, const Cube& R0);
// amplitude * exp(-1/(1-|x-c|^2/rho^2)), compactly supported in B(c, rho)
ScalarField smooth_bump_field(const Vec& c, double rho, double amplitude = 1.0);
// Scalar multiple and linear combination of fields (oracles combined when present).
ScalarField scaled_field(const ScalarField& f, double a);
ScalarField combine_fields(const ScalarField& f, double a, const ScalarField& g, double b);

// --- Whitney extension and mollification -----------------------------------

struct WhitneyOptions {
  int max_level = 14;       // finest Whitney cube level considered
  double resolution = 0;    // sample spacing rho; 0 = estimate from samples
};

struct WhitneyExtension {
  ScalarField field;
  double resolution = 0;
  std::shared_ptr<const void> state;
};

WhitneyExtension whitney_extend(const std::vector<Vec>& samples, const std::vector<double>& values,
                                const PorousCompact& K, const WhitneyOptions& opt = {});

// Whitney cubes whose 9/8 dilation contains x, with their anchor samples.
struct WhitneyCubeRef {
  Cube cube;
  Vec anchor;
};
std::vector<WhitneyCubeRef> whitney_cubes_at(const WhitneyExtension& w, const Vec& x);

struct MollifyOptions {
  int nodes = 12;  // Gauss-Legendre nodes per axis on supp phi_eps
};

// f * phi_eps with the normalized radial exponential bump of radius eps.
ScalarField mollify(const ScalarField& f, double eps, const MollifyOptions& opt = {});

// Radial normalization constant 1 / int exp(-1/(1-|x|^2)) dx.
double mollifier_norm(int d);
// Discrete mass of the tensor rule used by mollify (should be 1 up to quadrature error).
double mollifier_discrete_mass(int d, int nodes);

struct GradientAuditRow {
  double max_ratio = 0;
  Vec argmax;
  std::size_t used = 0, skipped = 0;
};

// max |nabla^k f(x)| dist(x,K)^k / w(dist(x,K)) over the grid, k in {1,2}.
GradientAuditRow gradient_bound_audit(const ScalarField& f, const PorousCompact& K, const ContinuityModulus& w,
                                      int k, const std::vector<Vec>& grid);

// Builds a field from its JSON descriptor.
ScalarField field_from_json(const nlohmann::json& j, const PorousCompact& K, const std::string& base_dir = ".");

}  // namespace ha
