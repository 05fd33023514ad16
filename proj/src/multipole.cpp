#include "harmapprox/multipole.hpp"

#include <algorithm>

#include "harmapprox/quadrature.hpp"

namespace ha {

namespace {

struct AxisRule {
  std::vector<double> y, w;
};

AxisRule axis_rule(const BumpPartition& P, long long k, const std::vector<double>& hints,
                   const std::vector<double>& breaks, int nT, int nF) {
  const double l = P.ell(), r = P.r();
  const double kk = static_cast<double>(k);
  const double b[4] = {(kk - r) * l, (kk + r) * l, (kk + 1 - r) * l, (kk + 1 + r) * l};
  std::vector<double> cuts(b, b + 4);
  for (double h : hints)
    if (h > b[0] && h < b[3]) {
      // geometric grading toward a point where f is only Holder continuous
      for (double g : {0.0, 1.0 / 64, 1.0 / 16, -1.0 / 64, -1.0 / 16}) {
        const double c = h + g * l;
        if (c > b[0] && c < b[3]) cuts.push_back(c);
      }
    }
  for (double c : breaks)
    if (c > b[0] && c < b[3]) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [l](double a, double c) { return c - a < 1e-14 * l; }),
             cuts.end());
  AxisRule out;
  Rule1D rule;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const bool flat = mid > b[1] && mid < b[2];
    append_gauss(flat ? nF : nT, cuts[i], cuts[i + 1], rule);
  }
  out.y = std::move(rule.x);
  out.w = std::move(rule.w);
  return out;
}

std::vector<double> raw_moments(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q, const Vec& z,
                                int order, double f_ref, int nT, int nF, std::size_t& evals) {
  const int d = P.dim();
  const double l = P.ell();
  const MultiIndexSet set(d, order);
  const Box S = P.support(q);
  std::vector<AxisRule> ax(d);
  for (int i = 0; i < d; ++i) {
    std::vector<double> hints;
    for (const auto& x0 : f.singular_points) {
      bool in = true;
      for (int k = 0; k < d; ++k) in = in && x0[k] > S.lo[k] && x0[k] < S.hi[k];
      if (in) hints.push_back(x0[i]);
    }
    static const std::vector<double> none;
    ax[i] = axis_rule(P, q.k[i], hints, i < static_cast<int>(f.axis_breaks.size()) ? f.axis_breaks[i] : none, nT, nF);
  }
  // per-axis factor tables u[a][node] = w Psi (y-z)^a and upp = w d^2/dy^2 of the same
  std::vector<std::vector<double>> u(d), upp(d);
  std::vector<int> N(d);
  for (int i = 0; i < d; ++i) {
    N[i] = static_cast<int>(ax[i].y.size());
    u[i].assign(static_cast<std::size_t>(order + 1) * N[i], 0.0);
    upp[i].assign(static_cast<std::size_t>(order + 1) * N[i], 0.0);
    std::vector<double> pw(order + 1);
    for (int a = 0; a < N[i]; ++a) {
      const double y = ax[i].y[a], w = ax[i].w[a];
      double v, d1, d2;
      P.psi012(y / l - static_cast<double>(q.k[i]), v, d1, d2);
      d1 /= l;
      d2 /= l * l;
      pw[0] = 1;
      for (int m = 1; m <= order; ++m) pw[m] = pw[m - 1] * (y - z[i]);
      for (int m = 0; m <= order; ++m) {
        double s = d2 * pw[m];
        if (m >= 1) s += 2 * d1 * m * pw[m - 1];
        if (m >= 2) s += v * m * (m - 1) * pw[m - 2];
        u[i][static_cast<std::size_t>(m) * N[i] + a] = w * v * pw[m];
        upp[i][static_cast<std::size_t>(m) * N[i] + a] = w * s;
      }
    }
  }
  // samples of f - f_ref, axis 0 fastest
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(N[i]);
  std::vector<double> g(total);
  {
    std::array<int, kMaxDim> idx{};
    Vec y(d);
    for (std::size_t m = 0; m < total; ++m) {
      for (int i = 0; i < d; ++i) y[i] = ax[i].y[idx[i]];
      g[m] = f.value(y) - f_ref;
      int i = 0;
      while (i < d && ++idx[i] == N[i]) idx[i++] = 0;
    }
    evals += total;
  }
  struct Part {
    int flag, ord;
    MultiIndex a;
    std::vector<double> data;
  };
  std::vector<Part> parts;
  parts.push_back({0, 0, MultiIndex{}, std::move(g)});
  for (int k = 0; k < d; ++k) {
    const bool last = k == d - 1;
    std::vector<Part> next;
    for (const auto& p : parts) {
      const std::size_t rest = p.data.size() / N[k];
      for (int m = 0; m + p.ord <= order; ++m) {
        for (int use_pp = 0; use_pp <= 1; ++use_pp) {
          const int flag = p.flag + use_pp;
          if (flag > 1 || (last && flag == 0)) continue;
          const double* U = (use_pp ? upp[k].data() : u[k].data()) + static_cast<std::size_t>(m) * N[k];
          Part np{flag, p.ord + m, p.a, std::vector<double>(rest, 0.0)};
          np.a[k] = m;
          for (std::size_t r = 0; r < rest; ++r) {
            const double* D = p.data.data() + r * N[k];
            double s = 0;
            for (int a = 0; a < N[k]; ++a) s += D[a] * U[a];
            np.data[r] = s;
          }
          next.push_back(std::move(np));
        }
      }
    }
    parts = std::move(next);
  }
  std::vector<double> M(set.size(), 0.0);
  for (const auto& p : parts) M[set.index(p.a)] += p.data[0];
  return M;
}

double binom(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

CubeMoments compute_moments(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q, const Vec& z,
                            int order, const MomentOptions& opt) {
  if (order < 0) throw InvalidArgument("moment order must be nonnegative");
  CubeMoments cm;
  cm.cube = q;
  cm.center = z;
  cm.order = order;
  const MultiIndexSet set(P.dim(), order);
  Box S = P.support(q);
  bool overlap = true;
  for (int i = 0; i < P.dim(); ++i) overlap = overlap && S.lo[i] < f.support.hi[i] && f.support.lo[i] < S.hi[i];
  if (!overlap) {
    cm.M.assign(set.size(), 0.0);
    cm.error.assign(set.size(), 0.0);
    return cm;
  }
  cm.f_ref = f.value(z);
  cm.M = raw_moments(f, P, q, z, order, cm.f_ref, opt.transition_nodes, opt.flat_nodes, cm.evaluations);
  cm.error.assign(cm.M.size(), 0.0);
  if (opt.estimate_error) {
    const auto lo = raw_moments(f, P, q, z, order, cm.f_ref, std::max(2, opt.transition_nodes - 2),
                                std::max(2, opt.flat_nodes - 2), cm.evaluations);
    for (std::size_t i = 0; i < lo.size(); ++i) cm.error[i] = std::abs(cm.M[i] - lo[i]);
  }
  return cm;
}

std::vector<double> translate_moments(const std::vector<double>& M, int d, int order_in, const Vec& z, const Vec& c,
                                      int order_out) {
  if (order_out > order_in) throw InvalidArgument("cannot translate to a higher order than computed");
  const MultiIndexSet in(d, order_in), out(d, order_out);
  const Vec s = z - c;
  std::vector<double> R(out.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const MultiIndex& a = out[i];
    // iterate beta <= alpha
    MultiIndex b{};
    while (true) {
      double coef = 1;
      for (int k = 0; k < d; ++k) coef *= binom(a[k], b[k]) * std::pow(s[k], a[k] - b[k]);
      R[i] += coef * M[in.index(b)];
      int k = 0;
      while (k < d && ++b[k] > a[k]) b[k++] = 0;
      if (k == d) break;
    }
  }
  return R;
}

std::vector<double> coefficients_from_moments(const std::vector<double>& M, int d, int order) {
  const MultiIndexSet set(d, order);
  const double C = newton_constant(d);
  std::vector<double> out(set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    out[i] = C * ((set.order(i) % 2) ? -1.0 : 1.0) / set.factorial(i) * M[i];
  return out;
}

double MultipoleExpansion::value(const Vec& t, int p) const {
  if (p > order) throw InvalidArgument("requested order exceeds the expansion");
  const KernelTable& kt = kernel_table(d, order);
  thread_local std::vector<double> buf;
  buf.resize(kt.indices().size());
  kt.eval(t - pole, p, buf.data());
  double s = 0;
  const std::size_t n = kt.indices().count_upto(p);
  for (std::size_t i = 0; i < n; ++i) s += coef[i] * buf[i];
  return s;
}

Vec MultipoleExpansion::gradient(const Vec& t) const {
  const KernelTable& kt = kernel_table(d, order + 1);
  const MultiIndexSet& big = kt.indices();
  thread_local std::vector<double> buf;
  buf.resize(big.size());
  kt.eval(t - pole, order + 1, buf.data());
  Vec g(d);
  const std::size_t n = big.count_upto(order);
  for (std::size_t i = 0; i < n; ++i) {
    MultiIndex a = big[i];
    for (int k = 0; k < d; ++k) {
      ++a[k];
      g[k] += coef[i] * buf[big.index(a)];
      --a[k];
    }
  }
  return g;
}

FarFieldValue MultipoleExpansion::far_field_eval(const Vec& t, int p) const {
  const double sd = std::sqrt(static_cast<double>(d));
  const double R = (t - pole).norm();
  if (R <= 8 * ell * d * sd) throw InvalidArgument("far-field evaluation inside the validity radius");
  if (p > order) throw InvalidArgument("requested order exceeds the expansion");
  const KernelTable& kt = kernel_table(d, order);
  std::vector<double> buf(kt.indices().size());
  kt.eval(t - pole, p, buf.data());
  FarFieldValue out;
  std::vector<double> per_order(p + 1, 0.0);
  const std::size_t n = kt.indices().count_upto(p);
  for (std::size_t i = 0; i < n; ++i) {
    out.value += coef[i] * buf[i];
    per_order[kt.indices().order(i)] += std::abs(coef[i] * buf[i]);
  }
  const double q = 4 * ell * d * sd / R;
  const double last = std::max(per_order[p], p > 0 ? per_order[p - 1] * q : 0.0);
  out.tail_bound = last * q / (1 - q);
  return out;
}

nlohmann::json MultipoleExpansion::to_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["cube"] = {{"level", cube.level}, {"k", std::vector<long long>(cube.k.begin(), cube.k.begin() + d)}};
  j["ell"] = ell;
  j["pole"] = pole.to_vector();
  j["order"] = order;
  j["coefficients"] = coef;
  return j;
}

MultipoleExpansion MultipoleExpansion::from_json(const nlohmann::json& j) {
  MultipoleExpansion e;
  e.d = j.at("d").get<int>();
  e.cube.d = e.d;
  e.cube.level = j.at("cube").at("level").get<int>();
  const auto k = j.at("cube").at("k").get<std::vector<long long>>();
  for (int i = 0; i < e.d; ++i) e.cube.k[i] = k.at(i);
  e.ell = j.at("ell").get<double>();
  e.pole = Vec::from(j.at("pole").get<std::vector<double>>());
  e.order = j.at("order").get<int>();
  e.coef = j.at("coefficients").get<std::vector<double>>();
  if (e.coef.size() != mi_count(e.d, e.order)) throw InvalidArgument("coefficient count does not match the order");
  return e;
}

MultipoleExpansion multipole_expansion(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                                       const PorosityBall& ball, int p_max, const MomentOptions& opt) {
  const int d = P.dim();
  const Vec z = q.cube().center();
  const CubeMoments cm = compute_moments(f, P, q, z, p_max, opt);
  MultipoleExpansion e;
  e.d = d;
  e.cube = q;
  e.ell = P.ell();
  e.pole = ball.center;
  e.order = p_max;
  e.coef = coefficients_from_moments(translate_moments(cm.M, d, p_max, z, ball.center, p_max), d, p_max);
  return e;
}

double moment_coefficient(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                          const PorosityBall& ball, const MultiIndex& alpha, const MomentOptions& opt) {
  const int d = P.dim();
  const int p = mi_order(alpha, d);
  const MultipoleExpansion e = multipole_expansion(f, P, q, ball, p, opt);
  return e.coef[MultiIndexSet(d, p).index(alpha)];
}

double moment_coefficient_pre_parts(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                                    const Vec& c, const MultiIndex& alpha, const QuadOptions& opt) {
  if (!f.laplacian) throw InvalidArgument("pre-parts moment needs a Laplacian oracle");
  const int d = P.dim();
  const Box S = P.support(q);
  std::vector<std::vector<double>> bps(d);
  const double l = P.ell(), r = P.r();
  for (int i = 0; i < d; ++i) {
    const double k = static_cast<double>(q.k[i]);
    bps[i] = {(k - r) * l, (k + r) * l, (k + 1 - r) * l, (k + 1 + r) * l};
    if (i < static_cast<int>(f.axis_breaks.size())) bps[i].insert(bps[i].end(), f.axis_breaks[i].begin(), f.axis_breaks[i].end());
  }
  std::vector<Vec> centers;
  std::vector<double> hw;
  for (const auto& x0 : f.singular_points) {
    bool in = true;
    for (int i = 0; i < d; ++i) in = in && x0[i] > S.lo[i] && x0[i] < S.hi[i];
    if (in) {
      centers.push_back(x0);
      hw.push_back(0.5 * r * l);
    }
  }
  const auto g = [&](const Vec& y) {
    const double ph = P.phi(q, y);
    if (ph == 0) return 0.0;
    const double lf = f.laplacian(y);
    if (!std::isfinite(lf)) return 0.0;
    double m = 1;
    for (int i = 0; i < d; ++i) m *= std::pow(y[i] - c[i], alpha[i]);
    return ph * m * lf;
  };
  const IntegralResult res = integrate_singular(g, S, bps, centers, hw, nullptr, opt);
  return newton_constant(d) * ((mi_order(alpha, d) % 2) ? -1.0 : 1.0) / mi_factorial(alpha, d) * res.value;
}

std::vector<double> coefficient_bound_ratios(const MultipoleExpansion& e, double fnorm, double w_ell) {
  const MultiIndexSet set(e.d, e.order);
  std::vector<double> out(e.order + 1, 0.0);
  const double base = 2 * e.ell * std::sqrt(static_cast<double>(e.d));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int k = set.order(i);
    const double r = std::abs(e.coef[i]) * set.factorial(i) / (fnorm * w_ell * std::pow(base, e.d + k - 2));
    out[k] = std::max(out[k], r);
  }
  return out;
}

}  // namespace ha
