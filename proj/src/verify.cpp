#include "harmapprox/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include "harmapprox/kernel.hpp"
#include "harmapprox/localization.hpp"
#include "harmapprox/multipole.hpp"
#include "harmapprox/parallel.hpp"
#include "harmapprox/partition.hpp"

namespace ha {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

CheckResult make(const std::string& suite, const std::string& name, bool ok, double measured, double threshold,
                 const std::string& detail, Clock::time_point start) {
  CheckResult r;
  r.suite = suite;
  r.name = name;
  r.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
  r.measured = measured;
  r.threshold = threshold;
  r.detail = detail;
  r.seconds = since(start);
  return r;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double max_over_min(const std::vector<double>& v) {
  if (v.empty()) return 0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo > 0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

std::string join(const std::vector<double>& v, const char* f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s;
}

// Random points of K_{radius}: samples moved by a random vector of length radius.
std::vector<Vec> near_points(const PorousCompact& K, std::size_t n, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, K.samples.size() - 1);
  std::normal_distribution<double> g(0, 1);
  std::vector<Vec> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vec x = K.samples[pick(rng)];
    Vec u(K.d);
    for (int k = 0; k < K.d; ++k) u[k] = g(rng);
    out.push_back(x + u * (radius / u.norm()));
  }
  return out;
}

double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

std::string status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::Unverified: return "UNVERIFIED";
  }
  return "?";
}

std::string format_check(const CheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %s/%s measured=%.4g threshold=%.4g (%.1fs)", status_name(r.status).c_str(),
                r.suite.c_str(), r.name.c_str(), r.measured, r.threshold, r.seconds);
  std::string s = buf;
  if (!r.detail.empty()) s += " " + r.detail;
  return s;
}

CheckResult check_reconstruction(std::uint64_t seed) {
  const auto start = Clock::now();
  const Vec c{1.0, 1.0, 1.0};
  const ScalarField f = smooth_bump_field(c, 0.6, 1.0);
  const Cube R0{Vec{0.0, 0.0, 0.0}, 2.0};
  const double fmax = f(c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.4, 1.6);
  std::vector<Vec> pts(20);
  for (auto& x : pts) x = Vec{U(rng), U(rng), U(rng)};
  QuadOptions opt;
  opt.abs_floor = 1e-7;
  double worst = 0, est = 0;
  for (const auto& x : pts) {
    const auto r = reconstruct(f, R0, 2, x, opt);
    worst = std::max(worst, std::abs(r.value - f(x)) / fmax);
    est = std::max(est, r.error_estimate);
  }
  const double secs = since(start);
  const bool ok = worst <= 1e-3 && secs <= 120;
  return make("localization", "reconstruction", ok, worst, 1e-3,
              "(20 points, j=2, max error estimate " + fmt("%.2g", est) + ", " + fmt("%.1f", secs) + " s of 120)",
              start);
}

CheckResult check_partition_identity(std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  double worst = 0;
  for (int j = 0; j <= 4; ++j) {
    const BumpPartition P(3, j);
    for (int i = 0; i < 100; ++i) worst = std::max(worst, std::abs(P.sum_at(Vec{U(rng), U(rng), U(rng)}) - 1));
  }
  return make("partition", "identity", worst < 1e-6, worst, 1e-6, "(100 points per level, j=0..4)", start);
}

CheckResult check_partition_gradient(std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  double gsum = 0, minphi = 0;
  for (int j = 0; j <= 4; ++j) {
    const BumpPartition P(3, j);
    for (int i = 0; i < 100; ++i) {
      const Vec x{U(rng), U(rng), U(rng)};
      Vec g(3);
      for (const auto& q : P.active_cubes(x)) {
        g += P.grad_phi(q, x) * P.ell();
        minphi = std::min(minphi, P.phi(q, x));
      }
      gsum = std::max(gsum, g.max_abs());
    }
  }
  const bool ok = gsum < 1e-9 && minphi >= 0;
  return make("partition", "gradient_sum", ok, gsum, 1e-9, "(ell * |sum grad phi_Q|; min phi_Q " + fmt("%.2g", minphi) + ")",
              start);
}

CheckResult check_kernel_fd() {
  const auto start = Clock::now();
  const int d = 3;
  const MultiIndexSet set(d, 5);
  const std::vector<Vec> ts{Vec{0.8, -0.5, 0.6}, Vec{-0.3, 0.9, 0.45}};
  double worst_dev = 0, worst_ratio = 4, worst_rel = 0;
  for (const auto& t : ts) {
    for (std::size_t a = 1; a < set.size(); ++a) {
      const MultiIndex alpha = set[a];
      int i = 0;
      while (alpha[i] == 0) ++i;
      MultiIndex beta = alpha;
      --beta[i];
      const double exact = kernel_derivative(alpha, t);
      auto cd = [&](double h) {
        Vec p = t, m = t;
        p[i] += h;
        m[i] -= h;
        return (kernel_derivative(beta, p) - kernel_derivative(beta, m)) / (2 * h);
      };
      const double h = 0.01;
      const double e1 = std::abs(cd(h) - exact), e2 = std::abs(cd(h / 2) - exact);
      const double ratio = e1 / e2;
      const double scale = mi_factorial(alpha, d) * std::pow(t.norm(), 2 - d - set.order(a));
      worst_rel = std::max(worst_rel, e2 / scale);
      if (std::abs(ratio - 4) > worst_dev) {
        worst_dev = std::abs(ratio - 4);
        worst_ratio = ratio;
      }
    }
  }
  const bool ok = worst_ratio >= 3 && worst_ratio <= 5 && worst_rel < 1e-3;
  return make("kernel", "fd_richardson", ok, worst_ratio, 4,
              "(worst ratio over |alpha|<=5, accepted [3,5]; max scaled FD error " + fmt("%.2g", worst_rel) + ")", start);
}

CheckResult check_kernel_bound_trend(std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed + 2);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> rad(0.2, 3.0);
  std::vector<Vec> samples;
  for (int i = 0; i < 400; ++i) {
    Vec u{g(rng), g(rng), g(rng)};
    samples.push_back(u * (rad(rng) / u.norm()));
  }
  const auto rows = kernel_bound_audit(8, samples);
  std::vector<double> xs, ys, ratios;
  for (const auto& r : rows) {
    xs.push_back(r.order);
    ys.push_back(std::log(r.max_ratio));
    ratios.push_back(r.max_ratio);
  }
  const double s = slope(xs, ys);
  return make("kernel", "bound_trend", s <= 0.05, s, 0.05, "(ratios " + join(ratios, "%.3g") + ")", start);
}

CheckResult check_kernel_harmonic() {
  const auto start = Clock::now();
  const MultiIndexSet set(3, 6);
  std::size_t nonzero = 0;
  for (std::size_t a = 0; a < set.size(); ++a)
    if (!kernel_laplacian_numerator(set[a], 3).is_zero()) ++nonzero;
  return make("kernel", "harmonic", nonzero == 0, static_cast<double>(nonzero), 0,
              "(nonzero symbolic Laplacians over |alpha|<=6)", start);
}

CheckResult check_localization_size(const ExperimentInputs& in) {
  const auto start = Clock::now();
  std::vector<double> ratios, near;
  const Vec x0 = in.f.singular_points.empty() ? in.K.samples.front() : in.f.singular_points.front();
  for (int j = 1; j <= 4; ++j) {
    // direct scan, since the near-cube search needs 2^-j < edge(R_0)/4
    const double ell = std::ldexp(1.0, -j);
    NearCubes nc;
    const Box R = in.K.bounding.box();
    const DyadicIndex first = dyadic_index_of(R.lo, j);
    const long long n = static_cast<long long>(std::llround(in.K.bounding.edge / ell));
    long long total = 1;
    for (int i = 0; i < in.K.d; ++i) total *= n;
    for (long long m = 0; m < total; ++m) {
      DyadicIndex q = first;
      for (long long i = 0, r = m; i < in.K.d; ++i, r /= n) q.k[i] += r % n;
      if (in.K.box_meets(q.cube().box())) nc.D.push_back(q);
    }
    // cubes around the singular point plus a stride of the rest
    std::vector<DyadicIndex> cubes;
    for (const auto& q : nc.D)
      if ((q.cube().center() - x0).max_abs() <= ell) cubes.push_back(q);
    auto add = [&](const DyadicIndex& q) {
      if (std::find(cubes.begin(), cubes.end(), q) == cubes.end()) cubes.push_back(q);
    };
    const std::size_t stride = std::max<std::size_t>(1, nc.D.size() / 6);
    for (std::size_t i = stride / 2; i < nc.D.size(); i += stride) add(nc.D[i]);
    // the cube nearest to each vertex of the hull box of D
    Vec lo = nc.D.front().cube().center(), hi = lo;
    for (const auto& q : nc.D)
      for (int i = 0; i < in.K.d; ++i) {
        lo[i] = std::min(lo[i], q.cube().center()[i]);
        hi[i] = std::max(hi[i], q.cube().center()[i]);
      }
    for (int m = 0; m < (1 << in.K.d); ++m) {
      Vec v(in.K.d);
      for (int i = 0; i < in.K.d; ++i) v[i] = (m >> i) & 1 ? hi[i] : lo[i];
      const auto best = std::min_element(nc.D.begin(), nc.D.end(), [&](const DyadicIndex& a, const DyadicIndex& b) {
        return (a.cube().center() - v).max_abs() < (b.cube().center() - v).max_abs();
      });
      add(*best);
    }
    const auto row = localization_size_audit(in.f, in.fnorm, in.w, j, cubes, {x0}, QuadOptions{});
    ratios.push_back(row.max_ratio);
    const auto at = localization_size_audit(in.f, in.fnorm, in.w, j, {dyadic_index_of(x0, j)}, {x0}, QuadOptions{});
    near.push_back(at.max_ratio);
  }
  const double r = max_over_min(ratios);
  return make("localization", "size_bound", r <= 3, r, 3,
              "(max over sampled cubes of D_j per level j=1..4: " + join(ratios, "%.3g") + "; cube at the singular point: " +
                  join(near, "%.3g") + ")",
              start);
}

CheckResult check_localization_forms() {
  const auto start = Clock::now();
  const ScalarField f = smooth_bump_field(Vec{1.0, 1.0, 1.0}, 0.6, 1.0);
  const BumpPartition P(3, 2);
  DyadicIndex q;
  q.level = 2;
  q.d = 3;
  q.k = {3, 4, 4};
  double worst = 0, tol = 0;
  for (const Vec& t : {Vec{0.9, 1.1, 1.05}, Vec{0.7, 1.3, 1.2}, Vec{0.3, 1.0, 1.0}}) {
    const auto a = localize(f, P, q, t);
    const auto b = localize_pre_parts(f, P, q, t);
    worst = std::max(worst, std::abs(a.value - b.value));
    tol = std::max(tol, a.error_estimate + b.error_estimate);
  }
  return make("localization", "value_only_vs_pre_parts", worst <= tol, worst, tol,
              "(three points, near and far regimes; threshold is the summed error estimate)", start);
}

CheckResult check_covering_law(double* lambda_out, double* C_out) {
  const auto start = Clock::now();
  const PorousCompact K = generate_cantor_dust(3, 5, 1.0 / 3.0, 5);
  std::vector<double> ells;
  for (int k = 2; k <= 6; ++k) ells.push_back(std::ldexp(1.0, -k));
  const CoveringEstimate est = estimate_covering_exponent(K, ells);
  // Triadic scales see 8^n cells per level, so their slope is log 8 / log 3.
  std::vector<double> tri;
  for (int k = 1; k <= 5; ++k) tri.push_back(std::pow(3.0, -k));
  const double tri_lambda = estimate_covering_exponent(K, tri).exponent;
  const double exact = std::log(8.0) / std::log(3.0);
  const double lambda = est.exponent, C = est.constant;
  double worst = 0;
  for (const auto& [ell, n] : est.counts) worst = std::max(worst, n / (C * std::pow(K.bounding.edge / ell, lambda)));
  if (lambda_out) *lambda_out = lambda;
  if (C_out) *C_out = C;
  const bool ok = std::abs(lambda - exact) <= 0.1 && worst <= 1.0 + 1e-12 && lambda < 3;
  return make("geometry", "covering_law", ok, lambda, exact,
              "(accepted +-0.1; scales 2^-2..2^-6, C_lambda " + fmt("%.3f", C) + ", max N/(C (R/ell)^lambda) " +
                  fmt("%.3f", worst) + "; triadic-scale slope " + fmt("%.4f", tri_lambda) + ")",
              start);
}

CheckResult check_porosity(const ExperimentInputs& in, std::uint64_t seed) {
  const auto start = Clock::now();
  const PorosityAudit a = audit_porosity(in.K, seed);
  return make("geometry", "porosity_audit", a.passed, a.worst_fraction, in.K.porosity,
              "(" + std::to_string(a.balls_tested) + " balls)", start);
}

CheckResult check_porosity_balls(const ExperimentInputs& in) {
  const auto start = Clock::now();
  const NearCubes nc = cubes_meeting_K(3, in.K);
  std::size_t bad = 0;
  std::vector<int> ok(nc.Dprime.size(), 0);
  parallel_for(nc.Dprime.size(), [&](std::size_t i) {
    try {
      const Cube Q = nc.Dprime[i].cube();
      ok[i] = verify_porosity_ball(find_porosity_ball(Q, in.K), Q, in.K) ? 1 : 0;
    } catch (const BallSearchFailure&) {
      ok[i] = 0;
    }
  });
  for (int v : ok) bad += v == 0;
  return make("geometry", "porosity_balls", bad == 0, static_cast<double>(bad), 0,
              "(failed cubes of " + std::to_string(nc.Dprime.size()) + " in D' at j=3)", start);
}

SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentInputs& in) {
  const auto start = Clock::now();
  SweepResult s;
  for (int j = cfg.j_min; j <= cfg.j_max; ++j) s.rows.push_back(run_level(cfg, in, j));
  s.seconds = since(start);
  return s;
}

std::optional<double> measure_speedup(const ExperimentConfig& cfg, const ExperimentInputs& in, int level,
                                      int threads) {
  if (static_cast<int>(std::thread::hardware_concurrency()) < threads) return std::nullopt;
  const int saved = ha::threads();
  auto timed = [&](int n) {
    set_threads(n);
    const auto t = Clock::now();
    run_level(cfg, in, level);
    return since(t);
  };
  const double t1 = timed(1), tn = timed(threads);
  set_threads(saved);
  return t1 / tn;
}

CheckResult check_jackson(const SweepResult& s, std::optional<double> speedup) {
  const auto start = Clock::now();
  std::vector<double> v;
  for (const auto& r : s.rows) v.push_back(r.jackson_ratio);
  const double m = max_over_min(v);
  std::string detail = "(jackson_ratio " + join(v, "%.3f") + "; sweep " + fmt("%.0f", s.seconds) + " s of 600; ";
  CheckResult r = make("approximant", "jackson", m <= 4 && s.seconds <= 600, m, 4, "", start);
  if (r.status == CheckStatus::Pass) {
    if (!speedup) {
      r.status = CheckStatus::Unverified;
      detail += "8-thread speedup not measurable: " + std::to_string(std::thread::hardware_concurrency()) +
                " hardware thread(s))";
    } else {
      if (*speedup < 0.6 * 8) r.status = CheckStatus::Fail;
      detail += "8-thread speedup " + fmt("%.2f", *speedup) + ", needs >= 4.8)";
    }
  } else {
    detail += speedup ? "8-thread speedup " + fmt("%.2f", *speedup) + ")" : "speedup not measured)";
  }
  r.detail = detail;
  return r;
}

CheckResult check_bernstein(const SweepResult& s) {
  const auto start = Clock::now();
  std::vector<double> v;
  for (const auto& r : s.rows) v.push_back(r.bernstein_ratio);
  const double m = max_over_min(v);
  return make("approximant", "bernstein", m <= 4, m, 4, "(bernstein_ratio " + join(v, "%.3f") + ")", start);
}

CheckResult check_harmonicity(const SweepResult& s) {
  const auto start = Clock::now();
  std::vector<double> v;
  double worst = 4;
  bool ok = !s.rows.empty();
  for (const auto& r : s.rows) {
    v.push_back(r.harm_ratio);
    if (!(r.harm_ratio >= 3 && r.harm_ratio <= 5) || r.harm_points == 0) ok = false;
    if (std::abs(r.harm_ratio - 4) > std::abs(worst - 4)) worst = r.harm_ratio;
  }
  return make("approximant", "harmonicity", ok, worst, 4, "(drop per level " + join(v, "%.3f") + ", accepted [3,5])",
              start);
}

CheckResult check_representation(const ExperimentInputs& in, const HarmonicApproximant& G, std::uint64_t seed) {
  const auto start = Clock::now();
  const auto pts = near_points(in.K, 10, G.delta / 4, seed + 3);
  double worst = 0, worst_diff = 0;
  for (const auto& t : pts) {
    const RepresentationCheck rc = representation_check(G, t);
    const double diff = std::abs(rc.subtraction - rc.direct);
    const double budget = 3 * (rc.subtraction_error + rc.direct_error);
    worst_diff = std::max(worst_diff, diff);
    worst = std::max(worst, budget > 0 ? diff / budget : (diff > 0 ? 1e300 : 0));
  }
  return make("approximant", "representation", worst <= 1, worst, 1,
              "(|difference| / (3 x summed estimates), 10 points, j=" + std::to_string(G.level) + "; max |difference| " +
                  fmt("%.2g", worst_diff) + ")",
              start);
}

CheckResult check_shell_decay(const ExperimentInputs& in, double lambda, double C_lambda) {
  const auto start = Clock::now();
  ApproximantOptions o;
  o.light = true;
  o.light_order = 3;
  o.moments = {7, 3, false};
  const HarmonicApproximant G = build_approximant(in.f, in.K, 7, o);
  const double threshold = 1.5 * std::pow(2.0, lambda - G.d);
  double worst = 0;
  std::size_t pairs = 0;
  std::vector<double> per;
  for (const auto& t : lattice_anchors(in, 4)) {
    const auto sd = splitting_diagnostics(G, t, lambda, C_lambda);
    for (std::size_t i = 0; i + 1 < sd.shells.size(); ++i) {
      const auto& a = sd.shells[i];
      const auto& b = sd.shells[i + 1];
      if (a.k < 4 || b.k != a.k + 1 || a.abs_sum <= 0) continue;
      const double r = b.abs_sum / a.abs_sum;
      per.push_back(r);
      worst = std::max(worst, r);
      ++pairs;
    }
  }
  const bool ok = pairs > 0 && worst <= threshold;
  return make("approximant", "shell_decay", ok, worst, threshold,
              "(S_{k+1}/S_k for k>=4 at j=7 over 4 anchors: " + join(per, "%.3g") + ")", start);
}

CheckResult check_certificate(const ExperimentConfig& cfg, const ExperimentInputs& in, const SweepResult& s) {
  const auto start = Clock::now();
  std::vector<FamilyLevel> fam;
  for (const auto& r : s.rows) fam.push_back({r.level, r.delta, r.sup_error, r.sup_grad});
  const auto pts = sup_sample_points(cfg, in, cfg.sampling.seminorm_samples);
  std::vector<double> vals(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = in.f(pts[i]);
  const Certificate c = certify_lip_from_family(fam, in.w, pts, vals);
  const double direct = lip_seminorm(pts, vals, in.w).value;
  const double ratio = direct > 0 ? c.bound / direct : 0.0;
  const bool ok = direct > 0 && ratio <= 10 && c.bound >= c.direct_on_pairs;
  return make("approximant", "certificate", ok, ratio, 10,
              "(certified " + fmt("%.3f", c.bound) + ", direct " + fmt("%.3f", direct) + ", C1 " + fmt("%.3f", c.C1) +
                  ", C2 " + fmt("%.3f", c.C2) + ", " + std::to_string(c.pairs_used) + " pairs used, " +
                  std::to_string(c.pairs_skipped) + " without a level in range)",
              start);
}

CheckResult check_gradient_fd(const ExperimentInputs& in, const HarmonicApproximant& G) {
  const auto start = Clock::now();
  const auto pts = near_points(in.K, 6, G.delta / 4, 99);
  const double h = G.delta / 64;
  double worst = 0;
  for (const auto& t : pts) {
    const EvalContext ctx(G, t);
    const Vec g = ctx.gradient(t);
    const double scale = std::max(g.norm(), in.fnorm * in.w(G.delta) / G.delta);
    for (int i = 0; i < G.d; ++i) {
      auto cd = [&](double s) {
        Vec p = t, m = t;
        p[i] += s;
        m[i] -= s;
        return (ctx.value(p) - ctx.value(m)) / (2 * s);
      };
      const double rich = (4 * cd(h / 2) - cd(h)) / 3;
      worst = std::max(worst, std::abs(rich - g[i]) / scale);
    }
  }
  return make("approximant", "gradient_vs_fd", worst <= 1e-5, worst, 1e-5,
              "(relative to max(|grad G|, ||f|| w(delta)/delta), step delta/64 with one Richardson step)", start);
}

CheckResult check_scaling(const ExperimentInputs& in, const HarmonicApproximant& G) {
  const auto start = Clock::now();
  const ScalarField f3 = scaled_field(in.f, 3.0);
  const HarmonicApproximant G3 = build_approximant(f3, in.K, G.level, G.opt);
  const auto pts = near_points(in.K, 20, G.delta / 4, 5);
  const auto a = evaluate_batch(G, pts, false);
  const auto b = evaluate_batch(G3, pts, false);
  double worst = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    worst = std::max(worst, std::abs(b[i].value - 3 * a[i].value) / (1e-300 + std::abs(3 * a[i].value)));
  return make("approximant", "scaling", worst <= 1e-9, worst, 1e-9, "(|G_{3f} - 3 G_f| / |3 G_f| at 20 points)", start);
}

CheckResult check_serialization(const ExperimentInputs& in, const HarmonicApproximant& G) {
  const auto start = Clock::now();
  const nlohmann::json j = nlohmann::json::parse(G.to_json().dump());
  const HarmonicApproximant H = approximant_from_json(j, in.K, in.f);
  const auto pts = near_points(in.K, 10, G.delta / 4, 6);
  const auto a = evaluate_batch(G, pts, false);
  const auto b = evaluate_batch(H, pts, false);
  double worst = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, std::abs(a[i].value - b[i].value));
  return make("approximant", "serialization", worst <= 1e-12, worst, 1e-12, "(max |G - G_reloaded| at 10 points)",
              start);
}

CheckResult check_constant_field(const ExperimentInputs& in) {
  const auto start = Clock::now();
  const ScalarField f = constant_field(in.K.d, 2.0, in.K.bounding);
  const HarmonicApproximant G = build_approximant(f, in.K, 2);
  const auto pts = near_points(in.K, 10, G.delta / 4, 7);
  double worst = 0;
  for (const auto& p : evaluate_batch(G, pts, false)) worst = std::max(worst, std::abs(p.value - 2.0));
  return make("approximant", "constant_field", worst <= 1e-6, worst, 1e-6, "(max |G - 2| for f = 2 at j=2)", start);
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"geometry", "partition", "kernel", "localization", "approximant", "all"};
  return names;
}

std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed) {
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw InvalidArgument("unknown suite '" + suite + "'");
  const bool all = suite == "all";
  std::vector<CheckResult> out;
  std::optional<ExperimentInputs> in;
  auto inputs = [&]() -> const ExperimentInputs& {
    if (!in) in = prepare_inputs(ExperimentConfig::benchmark());
    return *in;
  };
  if (all || suite == "geometry") {
    out.push_back(check_covering_law());
    out.push_back(check_porosity(inputs(), seed));
    out.push_back(check_porosity_balls(inputs()));
  }
  if (all || suite == "partition") {
    out.push_back(check_partition_identity(seed));
    out.push_back(check_partition_gradient(seed));
  }
  if (all || suite == "kernel") {
    out.push_back(check_kernel_fd());
    out.push_back(check_kernel_bound_trend(seed));
    out.push_back(check_kernel_harmonic());
  }
  if (all || suite == "localization") {
    out.push_back(check_localization_forms());
    out.push_back(check_localization_size(inputs()));
    out.push_back(check_reconstruction(seed));
  }
  if (all || suite == "approximant") {
    const HarmonicApproximant G = build_approximant(inputs().f, inputs().K, 2);
    out.push_back(check_representation(inputs(), G, seed));
    out.push_back(check_gradient_fd(inputs(), G));
    out.push_back(check_scaling(inputs(), G));
    out.push_back(check_serialization(inputs(), G));
    out.push_back(check_constant_field(inputs()));
    ExperimentConfig cfg = ExperimentConfig::benchmark();
    cfg.j_min = cfg.j_max = 2;
    SweepResult s = run_sweep(cfg, inputs());
    out.push_back(check_harmonicity(s));
  }
  return out;
}

}  // namespace ha
