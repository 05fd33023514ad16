#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harmapprox/approximant.hpp"
#include "harmapprox/field.hpp"
#include "harmapprox/geometry.hpp"
#include "harmapprox/moduli.hpp"

namespace ha {

struct SamplingOptions {
  std::size_t sup_samples = 1500;    // stride subsample of the K cloud for sup_K |f - G|
  std::size_t near_hint = 64;        // extra samples closest to each singular point of f
  std::size_t net_points = 64;       // thin K_delta net: samples shifted by delta/2
  int grid_anchors = 8;              // anchors of the K_delta lattices
  std::size_t gradient_points = 1500;  // cap on the gradient lattice
  std::size_t harmonic_points = 200;   // cap on the harmonicity lattice
  std::size_t seminorm_samples = 3000;  // subset for the direct seminorm (exact pairs)
};

// Everything a level sweep needs; all defaults are explicit in to_json().
struct ExperimentConfig {
  nlohmann::json compact;
  nlohmann::json field;
  nlohmann::json modulus;
  std::optional<double> field_norm;  // measured on samples when absent
  int j_min = 2, j_max = 5;
  ApproximantOptions approx;
  SamplingOptions sampling;
  std::uint64_t seed = 12345;
  int threads = 0;  // 0 keeps the current setting
  std::string out_dir = "out";
  std::string base_dir = ".";  // resolves relative paths inside descriptors

  static ExperimentConfig benchmark();  // Cantor dust d=3, |x-x0|^{1/2} cutoff, t^{1/2}
  nlohmann::json to_json() const;
  // Missing keys keep the benchmark defaults; throws InvalidArgument on bad values.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
  void validate() const;
};

// Frozen inputs of a sweep.
struct ExperimentInputs {
  PorousCompact K;
  ScalarField f;
  ContinuityModulus w;
  double fnorm = 0;
  std::vector<Vec> singular_hints;  // samples nearest to the singular points of f
};

ExperimentInputs prepare_inputs(const ExperimentConfig& cfg);

struct LevelReport {
  int level = 0;
  double delta = 0;
  double sup_error = 0, jackson_ratio = 0;
  double sup_grad = 0, bernstein_ratio = 0;
  double harm_residual = 0, harm_residual_half = 0, harm_ratio = 0;
  double i1 = 0, i2 = 0;
  double max_error_estimate = 0;
  std::size_t cubes = 0, sup_points = 0, grad_points = 0, harm_points = 0, harm_skipped = 0;
  double build_seconds = 0, seconds = 0;
  std::vector<std::string> warnings;
};

// Builds G at level j and measures the sup error, gradient and harmonicity.
// When G_out is non-null the approximant is moved there.
LevelReport run_level(const ExperimentConfig& cfg, const ExperimentInputs& in, int level,
                      HarmonicApproximant* G_out = nullptr);

// The K sample subset used for sup errors, seminorms and certificates.
std::vector<Vec> sup_sample_points(const ExperimentConfig& cfg, const ExperimentInputs& in, std::size_t cap);

// Anchors of the K_delta lattices: the singular hints first, then a stride of samples.
std::vector<Vec> lattice_anchors(const ExperimentInputs& in, int count);

std::string report_csv_header();
// %.10g, the number format of every CSV cell.
std::string fmt_double(double x);
std::string report_csv_row(const LevelReport& r);

// Stable FNV-1a hash of the serialized config, hex encoded.
std::string config_hash(const nlohmann::json& j);

}  // namespace ha
