#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harmapprox/experiment.hpp"

namespace ha {

// UNVERIFIED marks a property the current machine cannot measure.
enum class CheckStatus { Pass, Fail, Unverified };

std::string status_name(CheckStatus s);

struct CheckResult {
  std::string suite, name;
  CheckStatus status = CheckStatus::Fail;
  double measured = 0, threshold = 0;
  std::string detail;
  double seconds = 0;
};

// One line: status, suite/name, measured value against threshold, detail.
std::string format_check(const CheckResult& r);

// max |sum_Q V_{phi_Q} f - f| / ||f||_inf at 20 random points for a smooth
// bump in d = 3, j = 2; also fails past two minutes.
CheckResult check_reconstruction(std::uint64_t seed);

// max |sum phi_Q - 1| at 100 random points per level j = 0..4.
CheckResult check_partition_identity(std::uint64_t seed);

// Max |sum grad phi_Q| and min phi_Q at random points (levels 0..4).
CheckResult check_partition_gradient(std::uint64_t seed);

// Central differences of d^beta vs d^(beta+e_i) for |alpha| <= 5: worst
// Richardson ratio e(h)/e(h/2), which must lie in [3, 5].
CheckResult check_kernel_fd();

// Least-squares slope in |alpha| of log max |d^alpha E0| / bound, |alpha| <= 8.
CheckResult check_kernel_bound_trend(std::uint64_t seed);

// Symbolic Laplacian of every kernel derivative |alpha| <= 6 vanishes.
CheckResult check_kernel_harmonic();

// max/min over j = 1..4 of sup |V_{phi_Q} f| / (||f||_w w(ell)) on the benchmark.
CheckResult check_localization_size(const ExperimentInputs& in);

// Value-only localization against the form before integration by parts.
CheckResult check_localization_forms();

// Covering exponent of the depth-5 Cantor dust fitted on ell = 2^-2..2^-6
// against log 8 / log 3, and N(ell) <= C_lambda (edge/ell)^lambda at every
// tabulated scale.
CheckResult check_covering_law(double* lambda_out = nullptr, double* C_out = nullptr);

// Randomized porosity audit of the benchmark compact.
CheckResult check_porosity(const ExperimentInputs& in, std::uint64_t seed);

// Every cube of D'_{3,K} gets a porosity ball that passes the replay.
CheckResult check_porosity_balls(const ExperimentInputs& in);

// Level sweep with total wall time.
struct SweepResult {
  std::vector<LevelReport> rows;
  double seconds = 0;
};

SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentInputs& in);

// Wall-clock speedup of one level at `threads` against one thread; empty
// when the machine has fewer hardware threads.
std::optional<double> measure_speedup(const ExperimentConfig& cfg, const ExperimentInputs& in, int level,
                                      int threads);

// jackson_ratio max/min <= 4, sweep <= 10 min, speedup at 8 threads >= 0.6 * 8.
CheckResult check_jackson(const SweepResult& s, std::optional<double> speedup);
// bernstein_ratio max/min <= 4.
CheckResult check_bernstein(const SweepResult& s);
// Residual drop under h -> h/2 in [3, 5] at every level.
CheckResult check_harmonicity(const SweepResult& s);

// At j = 2, |subtraction - direct| <= 3 (sum of error estimates) at 10 random points of K_{delta/2}.
CheckResult check_representation(const ExperimentInputs& in, const HarmonicApproximant& G, std::uint64_t seed);

// Light build at j = 7: worst S_{k+1}/S_k over shells k >= 4 and a few
// anchors, against 1.5 * 2^(lambda - d).
CheckResult check_shell_decay(const ExperimentInputs& in, double lambda, double C_lambda);

// Certified seminorm from the sweep over the direct sampled seminorm, <= 10.
CheckResult check_certificate(const ExperimentConfig& cfg, const ExperimentInputs& in, const SweepResult& s);

// Analytic gradient of G against a Richardson-extrapolated central difference, step delta/64.
CheckResult check_gradient_fd(const ExperimentInputs& in, const HarmonicApproximant& G);

// f -> 3f scales G by 3 and leaves the ratios unchanged.
CheckResult check_scaling(const ExperimentInputs& in, const HarmonicApproximant& G);

// Serialization round trip reproduces G at sample points.
CheckResult check_serialization(const ExperimentInputs& in, const HarmonicApproximant& G);

// f = const gives G = f.
CheckResult check_constant_field(const ExperimentInputs& in);

const std::vector<std::string>& suite_names();

// Runs geometry, partition, kernel, localization, approximant or all;
// throws InvalidArgument for other names.
std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed);

}  // namespace ha
