#include <cstdio>
#include <string>
#include <vector>

#include "harmapprox/verify.hpp"

using namespace ha;

namespace {

struct Line {
  int id;
  CheckResult r;
};

// Combines two checks into one criterion: FAIL dominates UNVERIFIED.
CheckResult both(const CheckResult& a, const CheckResult& b) {
  CheckResult r = a;
  if (a.status == CheckStatus::Fail || b.status == CheckStatus::Fail)
    r.status = CheckStatus::Fail;
  else if (a.status == CheckStatus::Unverified || b.status == CheckStatus::Unverified)
    r.status = CheckStatus::Unverified;
  r.name = a.name + "+" + b.name;
  r.detail = a.detail + "; " + b.name + " " + std::to_string(b.measured) + " vs " + std::to_string(b.threshold) +
             " " + b.detail;
  r.seconds = a.seconds + b.seconds;
  return r;
}

void emit(int id, const CheckResult& r) {
  std::printf("criterion %d: %s\n", id, format_check(r).c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  const std::uint64_t seed = 12345;
  std::vector<Line> lines;
  auto run = [&](int id, const CheckResult& r) {
    emit(id, r);
    lines.push_back({id, r});
  };

  const ExperimentConfig cfg = ExperimentConfig::benchmark();
  const ExperimentInputs in = prepare_inputs(cfg);

  run(1, check_reconstruction(seed));
  run(2, check_partition_identity(seed));
  run(3, both(check_kernel_fd(), check_kernel_bound_trend(seed)));
  run(4, check_localization_size(in));
  double lambda = 0, C = 0;
  run(5, check_covering_law(&lambda, &C));

  const SweepResult sweep = run_sweep(cfg, in);
  const auto speedup = measure_speedup(cfg, in, 4, 8);
  run(6, check_jackson(sweep, speedup));
  run(7, check_bernstein(sweep));
  run(8, check_harmonicity(sweep));

  {
    const HarmonicApproximant G = build_approximant(in.f, in.K, 2, cfg.approx);
    run(9, check_representation(in, G, seed));
  }
  run(10, check_shell_decay(in, lambda, C));
  run(11, check_certificate(cfg, in, sweep));

  int pass = 0, fail = 0, unverified = 0;
  for (const auto& l : lines) {
    if (l.r.status == CheckStatus::Pass) ++pass;
    if (l.r.status == CheckStatus::Fail) ++fail;
    if (l.r.status == CheckStatus::Unverified) ++unverified;
  }
  std::printf("summary: %d PASS, %d FAIL, %d UNVERIFIED\n", pass, fail, unverified);
  return fail ? 1 : 0;
}
