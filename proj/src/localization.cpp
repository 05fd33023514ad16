#include "harmapprox/localization.hpp"

#include <algorithm>
#include <queue>

#include "harmapprox/parallel.hpp"
#include "harmapprox/quadrature.hpp"

namespace ha {

Vec FundamentalSolution::gradient(const Vec& t) const {
  const double r = t.norm();
  return t * (C * (2 - d) * std::pow(r, -d));
}

namespace {

struct Region {
  bool pyramid = false;
  Vec lo, hi;  // box corners, or (u, v_1..v_{d-1}) parameter ranges
  int center = -1, axis = 0, sign = 1;
  double value = 0, error = 0, abs = 0;
  bool operator<(const Region& o) const { return error < o.error; }
};

class Cubature {
 public:
  Cubature(const std::function<double(const Vec&)>& g, const Box& domain, const std::vector<Vec>& centers,
           const std::vector<double>& hw, const QuadOptions& opt)
      : g_(g), dom_(domain), centers_(centers), hw_(hw), opt_(opt), d_(domain.lo.d) {}

  void eval(Region& R) {
    double lo_sum = 0, hi_sum = 0, abs_sum = 0;
    if (!R.pyramid) {
      std::array<int, kMaxDim> n1{}, n2{};
      for (int i = 0; i < d_; ++i) n1[i] = opt_.box_nodes, n2[i] = 2 * opt_.box_nodes;
      lo_sum = tensor(R, n1, nullptr);
      hi_sum = tensor(R, n2, &abs_sum);
    } else {
      std::array<int, kMaxDim> n1{}, n2{};
      n1[0] = opt_.radial_nodes;
      n2[0] = 2 * opt_.radial_nodes;
      for (int i = 1; i < d_; ++i) n1[i] = opt_.angular_nodes, n2[i] = 2 * opt_.angular_nodes;
      lo_sum = tensor(R, n1, nullptr);
      hi_sum = tensor(R, n2, &abs_sum);
    }
    R.value = hi_sum;
    R.error = std::abs(hi_sum - lo_sum);
    R.abs = abs_sum;
  }

  std::size_t evaluations() const { return evals_; }

 private:
  // Tensor Gauss rule over the region's parameter box.
  double tensor(const Region& R, const std::array<int, kMaxDim>& n, double* abs_out) {
    std::array<Rule1D, kMaxDim> rules;
    for (int i = 0; i < d_; ++i) rules[i] = gauss_legendre(n[i], R.lo[i], R.hi[i]);
    std::array<int, kMaxDim> idx{};
    double sum = 0, asum = 0;
    Vec p(d_), y(d_);
    while (true) {
      double w = 1;
      for (int i = 0; i < d_; ++i) {
        p[i] = rules[i].x[idx[i]];
        w *= rules[i].w[idx[i]];
      }
      double val = 0;
      if (!R.pyramid) {
        ++evals_;
        val = w * g_(p);
      } else {
        const double u = p[0], s = u * u, h = hw_[R.center];
        const Vec& c = centers_[R.center];
        int m = 1;
        bool inside = true;
        for (int i = 0; i < d_; ++i) {
          const double dir = i == R.axis ? R.sign : p[m++];
          y[i] = c[i] + h * s * dir;
          if (y[i] < dom_.lo[i] || y[i] > dom_.hi[i]) inside = false;
        }
        if (inside) {
          ++evals_;
          val = w * std::pow(h, d_) * std::pow(s, d_ - 1) * 2 * u * g_(y);
        }
      }
      sum += val;
      asum += std::abs(val);
      int i = 0;
      while (i < d_ && ++idx[i] == n[i]) idx[i++] = 0;
      if (i == d_) break;
    }
    if (abs_out) *abs_out = asum;
    return sum;
  }

  const std::function<double(const Vec&)>& g_;
  Box dom_;
  const std::vector<Vec>& centers_;
  const std::vector<double>& hw_;
  QuadOptions opt_;
  int d_;
  std::size_t evals_ = 0;
};

void split(const Region& R, Region& a, Region& b) {
  const int d = R.lo.d;
  int best = 0;
  double ext = -1;
  for (int i = 0; i < d; ++i) {
    // u lives on [0,1], face coordinates on [-1,1]
    const double e = (R.hi[i] - R.lo[i]) * (R.pyramid && i == 0 ? 2.0 : 1.0);
    if (e > ext) ext = e, best = i;
  }
  a = b = R;
  const double mid = 0.5 * (R.lo[best] + R.hi[best]);
  a.hi[best] = mid;
  b.lo[best] = mid;
}

double box_dist(const Box& b, const Vec& x) {
  double s = 0;
  for (int i = 0; i < x.d; ++i) {
    const double e = std::max({b.lo[i] - x[i], 0.0, x[i] - b.hi[i]});
    s += e * e;
  }
  return std::sqrt(s);
}

bool inside_box(const Box& b, const Vec& x) {
  for (int i = 0; i < x.d; ++i)
    if (x[i] < b.lo[i] || x[i] > b.hi[i]) return false;
  return true;
}

bool boxes_overlap(const Box& a, const Box& b) {
  for (int i = 0; i < a.lo.d; ++i)
    if (!(a.lo[i] < b.hi[i] && b.lo[i] < a.hi[i])) return false;
  return true;
}

double linf(const Vec& a, const Vec& b) { return (a - b).max_abs(); }

// |w|^{-d} from |w|^2 without pow
double inv_pow_d(double r2, int d) {
  double p = (d % 2) ? std::sqrt(r2) : 1.0;
  for (int k = 0; k < d / 2; ++k) p *= r2;
  return 1.0 / p;
}

}  // namespace

IntegralResult integrate_singular(const std::function<double(const Vec&)>& g, const Box& domain,
                                  std::vector<std::vector<double>> bps, const std::vector<Vec>& centers,
                                  const std::vector<double>& hw,
                                  const std::function<bool(const Vec&, const Vec&)>& skip, const QuadOptions& opt) {
  const int d = domain.lo.d;
  bps.resize(d);
  for (std::size_t k = 0; k < centers.size(); ++k)
    for (int i = 0; i < d; ++i) {
      bps[i].push_back(centers[k][i] - hw[k]);
      bps[i].push_back(centers[k][i] + hw[k]);
    }
  for (int i = 0; i < d; ++i) {
    auto& b = bps[i];
    b.push_back(domain.lo[i]);
    b.push_back(domain.hi[i]);
    std::erase_if(b, [&](double x) { return x < domain.lo[i] || x > domain.hi[i]; });
    std::sort(b.begin(), b.end());
    const double eps = 1e-13 * (domain.hi[i] - domain.lo[i]);
    b.erase(std::unique(b.begin(), b.end(), [eps](double x, double y) { return y - x <= eps; }), b.end());
    if (b.size() < 2) return {};
  }

  Cubature cub(g, domain, centers, hw, opt);
  std::priority_queue<Region> heap;
  double total = 0, err = 0, abs = 0;
  auto push = [&](Region& R) {
    cub.eval(R);
    total += R.value;
    err += R.error;
    abs += R.abs;
    heap.push(R);
  };

  std::array<std::size_t, kMaxDim> idx{};
  while (true) {
    Region R;
    R.lo = Vec(d);
    R.hi = Vec(d);
    Vec mid(d);
    for (int i = 0; i < d; ++i) {
      R.lo[i] = bps[i][idx[i]];
      R.hi[i] = bps[i][idx[i] + 1];
      mid[i] = 0.5 * (R.lo[i] + R.hi[i]);
    }
    bool covered = false;
    for (std::size_t k = 0; k < centers.size() && !covered; ++k) covered = linf(mid, centers[k]) < hw[k];
    if (!covered && !(skip && skip(R.lo, R.hi))) push(R);
    int i = 0;
    while (i < d && ++idx[i] == bps[i].size() - 1) idx[i++] = 0;
    if (i == d) break;
  }
  for (std::size_t k = 0; k < centers.size(); ++k)
    for (int a = 0; a < d; ++a)
      for (int s : {-1, 1}) {
        Region R;
        R.pyramid = true;
        R.center = static_cast<int>(k);
        R.axis = a;
        R.sign = s;
        R.lo = Vec(d, -1.0);
        R.hi = Vec(d, 1.0);
        R.lo[0] = 0;
        push(R);
      }

  int regions = static_cast<int>(heap.size());
  auto target = [&] { return std::max(opt.tol * abs, opt.abs_floor); };
  while (!heap.empty() && err > target() && regions < opt.max_regions) {
    Region R = heap.top();
    heap.pop();
    total -= R.value;
    err -= R.error;
    abs -= R.abs;
    Region a, b;
    split(R, a, b);
    push(a);
    push(b);
    ++regions;
  }
  // re-sum to shed cancellation drift from the running totals
  IntegralResult out;
  while (!heap.empty()) {
    out.value += heap.top().value;
    out.error += heap.top().error;
    out.abs += heap.top().abs;
    heap.pop();
  }
  out.evaluations = cub.evaluations();
  out.converged = out.error <= std::max(opt.tol * out.abs, opt.abs_floor);
  return out;
}

namespace {

struct LocalSetup {
  Box support;
  std::vector<std::vector<double>> bps;
  double core_lo[kMaxDim], core_hi[kMaxDim];
};

LocalSetup local_setup(const BumpPartition& P, const DyadicIndex& q) {
  LocalSetup s;
  const int d = P.dim();
  const double l = P.ell(), r = P.r();
  s.support = P.support(q);
  s.bps.resize(d);
  for (int i = 0; i < d; ++i) {
    const double k = static_cast<double>(q.k[i]);
    s.bps[i] = {(k - r) * l, (k + r) * l, (k + 1 - r) * l, (k + 1 + r) * l};
    s.core_lo[i] = (k + r) * l;
    s.core_hi[i] = (k + 1 - r) * l;
  }
  return s;
}

// Duffy cubes about t (near regime) and the singular points of f inside the support.
void singular_centers(const ScalarField& f, const BumpPartition& P, const Box& S, const Vec& t, bool near,
                      std::vector<Vec>& centers, std::vector<double>& hw) {
  const double h = 0.5 * P.r() * P.ell();
  if (near && inside_box(S, t)) centers.push_back(t);
  for (const auto& x0 : f.singular_points) {
    if (!inside_box(S, x0)) continue;
    if (!centers.empty() && near && linf(x0, t) < h / 16) continue;
    bool dup = false;
    for (const auto& c : centers) dup = dup || linf(c, x0) < 1e-12;
    if (!dup) centers.push_back(x0);
  }
  hw.assign(centers.size(), h);
  for (std::size_t a = 0; a < centers.size(); ++a)
    for (std::size_t b = 0; b < centers.size(); ++b)
      if (a != b) hw[a] = std::min(hw[a], 0.45 * linf(centers[a], centers[b]));
}

}  // namespace

LocalizationValue localize(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q, const Vec& t,
                           const QuadOptions& opt) {
  if (q.level != P.level() || q.d != P.dim()) throw InvalidArgument("cube does not belong to the partition level");
  const int d = P.dim();
  LocalizationValue out;
  out.cube = q;
  out.point = t;
  const Cube Q = q.cube();
  const Box twoQ = Q.dilate(2).box();
  const bool near = box_dist(twoQ, t) <= P.ell() / 4;
  out.regime = near ? Regime::NearSingular : Regime::FarSmooth;
  LocalSetup s = local_setup(P, q);
  if (!boxes_overlap(s.support, f.support)) return out;

  for (const auto& x0 : f.singular_points)
    for (int i = 0; i < d; ++i) s.bps[i].push_back(x0[i]);
  for (int i = 0; i < static_cast<int>(f.axis_breaks.size()); ++i)
    s.bps[i].insert(s.bps[i].end(), f.axis_breaks[i].begin(), f.axis_breaks[i].end());
  std::vector<Vec> centers;
  std::vector<double> hw;
  singular_centers(f, P, s.support, t, near, centers, hw);

  const double ft = f.value(t);
  const double C = newton_constant(d);
  const auto g = [&](const Vec& y) {
    Vec gp;
    double lp = 0;
    P.phi_all(q, y, gp, lp);
    if (lp == 0 && gp.max_abs() == 0) return 0.0;
    const Vec w = t - y;
    const double r2 = w.norm2();
    if (r2 == 0) return 0.0;
    const double rd = inv_pow_d(r2, d);
    const double k = r2 * rd * lp + 2 * (d - 2) * rd * w.dot(gp);
    return C * k * (f.value(y) - ft);
  };
  const auto skip = [&](const Vec& lo, const Vec& hi) {
    for (int i = 0; i < d; ++i)
      if (lo[i] < s.core_lo[i] - 1e-14 || hi[i] > s.core_hi[i] + 1e-14) return false;
    return true;
  };
  const IntegralResult r = integrate_singular(g, s.support, s.bps, centers, hw, skip, opt);
  out.value = r.value;
  out.error_estimate = r.error;
  out.abs_integral = r.abs;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  return out;
}

LocalizationValue localize_pre_parts(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q,
                                     const Vec& t, const QuadOptions& opt) {
  if (!f.laplacian) throw InvalidArgument("pre-parts localization needs a Laplacian oracle");
  const int d = P.dim();
  LocalizationValue out;
  out.cube = q;
  out.point = t;
  const Box twoQ = q.cube().dilate(2).box();
  const bool near = box_dist(twoQ, t) <= P.ell() / 4;
  out.regime = near ? Regime::NearSingular : Regime::FarSmooth;
  LocalSetup s = local_setup(P, q);
  if (!boxes_overlap(s.support, f.support)) return out;
  for (const auto& x0 : f.singular_points)
    for (int i = 0; i < d; ++i) s.bps[i].push_back(x0[i]);
  for (int i = 0; i < static_cast<int>(f.axis_breaks.size()); ++i)
    s.bps[i].insert(s.bps[i].end(), f.axis_breaks[i].begin(), f.axis_breaks[i].end());
  std::vector<Vec> centers;
  std::vector<double> hw;
  singular_centers(f, P, s.support, t, near, centers, hw);
  const double C = newton_constant(d);
  const auto g = [&](const Vec& y) {
    const double ph = P.phi(q, y);
    if (ph == 0) return 0.0;
    const double r = (t - y).norm();
    if (r == 0) return 0.0;
    const double lf = f.laplacian(y);
    if (!std::isfinite(lf)) return 0.0;
    return C * std::pow(r, 2 - d) * ph * lf;
  };
  const IntegralResult r = integrate_singular(g, s.support, s.bps, centers, hw, nullptr, opt);
  out.value = r.value;
  out.error_estimate = r.error;
  out.abs_integral = r.abs;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  return out;
}

double localize_midpoint(const ScalarField& f, const BumpPartition& P, const DyadicIndex& q, const Vec& t, int n) {
  const int d = P.dim();
  const Box S = P.support(q);
  const double ft = f.value(t);
  const double C = newton_constant(d);
  Vec hcell(d);
  double vol = 1;
  for (int i = 0; i < d; ++i) {
    hcell[i] = (S.hi[i] - S.lo[i]) / n;
    vol *= hcell[i];
  }
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  const int nt = std::max(1, threads());
  std::vector<double> part(nt, 0.0);
  parallel_for(static_cast<std::size_t>(nt), [&](std::size_t w) {
    double acc = 0;
    Vec y(d), gp;
    for (std::size_t m = w; m < total; m += nt) {
      std::size_t r = m;
      for (int i = 0; i < d; ++i) {
        y[i] = S.lo[i] + (static_cast<double>(r % n) + 0.5) * hcell[i];
        r /= n;
      }
      double lp = 0;
      P.phi_all(q, y, gp, lp);
      if (lp == 0 && gp.max_abs() == 0) continue;
      const Vec wv = t - y;
      const double r2 = wv.norm2();
      if (r2 == 0) continue;
      const double rd = inv_pow_d(r2, d);
      acc += (r2 * rd * lp + 2 * (d - 2) * rd * wv.dot(gp)) * (f.value(y) - ft);
    }
    part[w] = acc;
  });
  double s = 0;
  for (double p : part) s += p;
  return C * s * vol;
}

std::vector<DyadicIndex> cubes_touching_support(const ScalarField& f, const Cube& R0, int level) {
  const int d = R0.dim();
  const double l = std::ldexp(1.0, -level);
  const long long n = std::llround(R0.edge / l);
  std::array<long long, kMaxDim> base{};
  for (int i = 0; i < d; ++i) {
    base[i] = std::llround(R0.corner[i] / l);
    if (std::abs(base[i] * l - R0.corner[i]) > 1e-12 || std::abs(n * l - R0.edge) > 1e-12)
      throw InvalidArgument("R_0 is not aligned with the dyadic grid at this level");
  }
  std::vector<DyadicIndex> out;
  std::array<long long, kMaxDim> idx{};
  while (true) {
    DyadicIndex q;
    q.level = level;
    q.d = d;
    for (int i = 0; i < d; ++i) q.k[i] = base[i] + idx[i];
    if (boxes_overlap(q.cube().dilate(2).box(), f.support)) out.push_back(q);
    int i = 0;
    while (i < d && ++idx[i] == n) idx[i++] = 0;
    if (i == d) break;
  }
  return out;
}

ReconstructionResult reconstruct(const ScalarField& f, const Cube& R0, int level, const Vec& x,
                                 const QuadOptions& opt) {
  const BumpPartition P(f.d, level);
  const auto cubes = cubes_touching_support(f, R0, level);
  std::vector<LocalizationValue> vals(cubes.size());
  parallel_for(cubes.size(), [&](std::size_t i) { vals[i] = localize(f, P, cubes[i], x, opt); });
  ReconstructionResult r;
  r.cubes = cubes.size();
  for (const auto& v : vals) {
    r.value += v.value;
    r.error_estimate += v.error_estimate;
  }
  return r;
}

SizeAuditRow localization_size_audit(const ScalarField& f, double fnorm, const ContinuityModulus& w, int level,
                                     const std::vector<DyadicIndex>& cubes, const std::vector<Vec>& extra,
                                     const QuadOptions& opt) {
  const int d = f.d;
  const BumpPartition P(d, level);
  struct Job {
    std::size_t cube;
    Vec t;
  };
  std::vector<Job> jobs;
  int net = 1;
  for (int i = 0; i < d; ++i) net *= 3;
  for (std::size_t c = 0; c < cubes.size(); ++c) {
    const Box b = cubes[c].cube().dilate(2).box();
    for (int m = 0; m < net; ++m) {
      Vec t(d);
      int r = m;
      for (int i = 0; i < d; ++i) {
        t[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * (1 + 2 * (r % 3)) / 6.0;
        r /= 3;
      }
      jobs.push_back({c, t});
    }
    for (const auto& x : extra)
      if (inside_box(b, x)) jobs.push_back({c, x});
  }
  std::vector<LocalizationValue> vals(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) { vals[i] = localize(f, P, cubes[jobs[i].cube], jobs[i].t, opt); });
  SizeAuditRow row;
  row.level = level;
  row.cubes = cubes.size();
  const double scale = fnorm * w(P.ell());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    row.evaluations += vals[i].evaluations;
    row.max_error_estimate = std::max(row.max_error_estimate, vals[i].error_estimate);
    const double ratio = scale > 0 ? std::abs(vals[i].value) / scale : 0.0;
    if (ratio > row.max_ratio || i == 0) {
      row.max_ratio = ratio;
      row.argmax_cube = cubes[jobs[i].cube];
      row.argmax_point = jobs[i].t;
    }
  }
  return row;
}

}  // namespace ha
