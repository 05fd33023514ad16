#include "harmapprox/approximant.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include "harmapprox/kdtree.hpp"
#include "harmapprox/kernel.hpp"
#include "harmapprox/parallel.hpp"
#include "harmapprox/quadrature.hpp"

namespace ha {

namespace {

double inv_pow_d(double r2, int d) {
  double p = (d % 2) ? std::sqrt(r2) : 1.0;
  for (int k = 0; k < d / 2; ++k) p *= r2;
  return 1.0 / p;
}

// ---- dense moment tensors ----------------------------------------------------
// Moments of order <= P are kept as dense (P+1)^d arrays, axis 0 fastest,
// while they are accumulated and translated; storage uses MultiIndexSet order.

std::size_t dense_size(int d, int P) {
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(P + 1);
  return n;
}

std::size_t dense_index(const MultiIndex& a, int d, int P) {
  std::size_t k = 0;
  for (int i = d - 1; i >= 0; --i) k = k * (P + 1) + a[i];
  return k;
}

// T <- moments about c of the tensor-grid values (weights included), order P.
void grid_moments(const std::vector<Rule1D>& rules, const double* vals, const Vec& c, int P, std::vector<double>& T,
                  std::vector<double>& work) {
  const int d = static_cast<int>(rules.size());
  const int np = P + 1;
  std::vector<std::size_t> n(d);
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= (n[a] = rules[a].x.size());
  work.assign(vals, vals + total);
  std::size_t se = 1;  // (P+1)^a
  std::vector<double> pw;
  for (int a = 0; a < d; ++a) {
    std::size_t rest = 1;
    for (int b = a + 1; b < d; ++b) rest *= n[b];
    pw.assign(static_cast<std::size_t>(np) * n[a], 0.0);
    for (std::size_t i = 0; i < n[a]; ++i) {
      const double u = rules[a].x[i] - c[a];
      double p = 1;
      for (int e = 0; e < np; ++e, p *= u) pw[e * n[a] + i] = p;
    }
    T.assign(se * np * rest, 0.0);
    for (std::size_t r = 0; r < rest; ++r)
      for (std::size_t i = 0; i < n[a]; ++i) {
        const double* src = &work[se * (i + n[a] * r)];
        for (int e = 0; e < np; ++e) {
          const double f = pw[e * n[a] + i];
          if (f == 0) continue;
          double* dst = &T[se * (e + np * r)];
          for (std::size_t k = 0; k < se; ++k) dst[k] += f * src[k];
        }
      }
    se *= np;
    work.swap(T);
  }
  T.swap(work);
}

// Re-centers dense moments from z to c: (y-c)^a = prod_k ((y-z)_k + s_k)^{a_k}, s = z - c.
void shift_dense(std::vector<double>& T, int d, int P, const Vec& s) {
  const int np = P + 1;
  std::vector<double> binom(np * np, 0.0);
  for (int a = 0; a < np; ++a) {
    binom[a * np] = 1;
    for (int b = 1; b <= a; ++b) binom[a * np + b] = binom[(a - 1) * np + b - 1] + (b < a ? binom[(a - 1) * np + b] : 0);
  }
  std::vector<double> pw(np), fiber(np);
  std::size_t stride = 1;
  const std::size_t total = T.size();
  for (int k = 0; k < d; ++k) {
    if (s[k] != 0) {
      pw[0] = 1;
      for (int e = 1; e < np; ++e) pw[e] = pw[e - 1] * s[k];
      for (std::size_t base = 0; base < total; ++base) {
        if ((base / stride) % np != 0) continue;
        for (int a = 0; a < np; ++a) fiber[a] = T[base + a * stride];
        for (int a = np - 1; a >= 0; --a) {
          double v = 0;
          for (int b = 0; b <= a; ++b) v += binom[a * np + b] * pw[a - b] * fiber[b];
          T[base + a * stride] = v;
        }
      }
    }
    stride *= np;
  }
}

void compress(const std::vector<double>& T, int d, int P, const MultiIndexSet& set, int p, double* out) {
  for (std::size_t i = 0; i < set.count_upto(p); ++i) out[i] = T[dense_index(set[i], d, P)];
}

void expand(const double* m, int d, int P, const MultiIndexSet& set, int p, std::vector<double>& T) {
  T.assign(dense_size(d, P), 0.0);
  for (std::size_t i = 0; i < set.count_upto(p); ++i) T[dense_index(set[i], d, P)] = m[i];
}

// ---- band layer ----------------------------------------------------------------

// Per-axis Gauss nodes on [a,b], cut at the field's breakpoints and graded
// toward hint coordinates.
void axis_nodes(double a, double b, const std::vector<double>& hints, const std::vector<double>& breaks, double ell,
                int n, Rule1D& out) {
  std::vector<double> cuts{a, b};
  for (double c : breaks)
    if (c > a && c < b) cuts.push_back(c);
  for (double h : hints)
    for (double g : {0.0, 1.0 / 64, 1.0 / 16, -1.0 / 64, -1.0 / 16}) {
      const double c = h + g * ell;
      if (c > a && c < b) cuts.push_back(c);
    }
  std::sort(cuts.begin(), cuts.end());
  out.x.clear();
  out.w.clear();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] - cuts[i] > 1e-14 * ell) append_gauss(n, cuts[i], cuts[i + 1], out);
}

// Tensor nodes of a band box with w Lap(Phi) f and w grad(Phi) f at each node
// (axis 0 fastest).
struct BoxNodes {
  std::vector<Rule1D> rules;
  std::vector<double> y, A, B;
  std::size_t count = 0;
};

void band_box_nodes(const HarmonicApproximant& G, const BumpPartition& P, const BandBox& b, int n, BoxNodes& out) {
  const int d = G.d;
  const double l = G.ell;
  out.rules.assign(d, Rule1D{});
  static const std::vector<double> none;
  for (int a = 0; a < d; ++a) {
    std::vector<double> hs;
    for (const auto& x0 : G.f.singular_points) {
      bool in = true;
      for (int k = 0; k < d; ++k) in = in && x0[k] > b.lo[k] && x0[k] < b.hi[k];
      if (in) hs.push_back(x0[a]);
    }
    axis_nodes(b.lo[a], b.hi[a], hs, a < static_cast<int>(G.f.axis_breaks.size()) ? G.f.axis_breaks[a] : none, l, n,
               out.rules[a]);
  }
  // per-axis psi tables: [axis][node][cell offset][value, d1, d2]
  std::vector<std::vector<std::array<double, 6>>> tab(d);
  for (int a = 0; a < d; ++a) {
    tab[a].resize(out.rules[a].x.size());
    for (std::size_t i = 0; i < out.rules[a].x.size(); ++i)
      for (int o = 0; o < b.cells[a]; ++o) {
        double v, d1, d2;
        P.psi012(out.rules[a].x[i] / l - static_cast<double>(b.cell0[a] + o), v, d1, d2);
        tab[a][i][3 * o] = v;
        tab[a][i][3 * o + 1] = d1 / l;
        tab[a][i][3 * o + 2] = d2 / (l * l);
      }
  }
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= out.rules[a].x.size();
  out.count = total;
  out.y.resize(total * d);
  out.A.assign(total, 0.0);
  out.B.assign(total * d, 0.0);
  std::array<std::size_t, kMaxDim> id{};
  Vec y(d);
  for (std::size_t m = 0; m < total; ++m) {
    double w = 1;
    for (int a = 0; a < d; ++a) {
      y[a] = out.rules[a].x[id[a]];
      w *= out.rules[a].w[id[a]];
      out.y[m * d + a] = y[a];
    }
    double lap = 0;
    std::array<double, kMaxDim> g{};
    for (const auto& c : b.in_dprime) {
      std::array<double, kMaxDim> v, d1, d2;
      for (int a = 0; a < d; ++a) {
        const auto& t = tab[a][id[a]];
        v[a] = t[3 * c[a]];
        d1[a] = t[3 * c[a] + 1];
        d2[a] = t[3 * c[a] + 2];
      }
      for (int a = 0; a < d; ++a) {
        double pg = d1[a], pl = d2[a];
        for (int k = 0; k < d; ++k)
          if (k != a) {
            pg *= v[k];
            pl *= v[k];
          }
        g[a] += pg;
        lap += pl;
      }
    }
    bool any = lap != 0;
    for (int a = 0; a < d; ++a) any = any || g[a] != 0;
    if (any) {
      const double fw = w * G.f.value(y);
      out.A[m] = fw * lap;
      for (int a = 0; a < d; ++a) out.B[m * d + a] = fw * g[a];
    }
    int a = 0;
    while (a < d && ++id[a] == out.rules[a].x.size()) id[a++] = 0;
  }
}

// Dense moments m_beta = int (y-c)^beta (A - 2 div B) of a band box: the
// layer potential of the box is -C_d sum (-1)^|b|/b! m_b d^b E0(t - c).
void band_box_moments(const BoxNodes& nd, const Vec& c, int d, int P, std::vector<double>& m) {
  std::vector<double> T, work, vals(nd.count);
  grid_moments(nd.rules, nd.A.data(), c, P, m, work);
  const int np = P + 1;
  for (int k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < nd.count; ++i) vals[i] = nd.B[i * d + k];
    grid_moments(nd.rules, vals.data(), c, P, T, work);
    std::size_t stride = 1;
    for (int a = 0; a < k; ++a) stride *= np;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const int e = static_cast<int>((i / stride) % np);
      if (e > 0) m[i] += 2.0 * e * T[i - stride];
    }
  }
}

void enumerate_band(HarmonicApproximant& G, const BumpPartition& P) {
  const int d = G.d;
  const double l = G.ell, r = P.r();
  using Code = std::array<long long, kMaxDim>;
  std::set<Code> codes;
  int n3 = 1;
  for (int i = 0; i < d; ++i) n3 *= 3;
  for (const auto& q : G.cubes)
    for (int m = 0; m < n3; ++m) {
      Code c{};
      int rr = m;
      for (int a = 0; a < d; ++a) {
        c[a] = 2 * q.k[a] + rr % 3;
        rr /= 3;
      }
      codes.insert(c);
    }
  for (const Code& c : codes) {
    BandBox b;
    b.lo = Vec(d);
    b.hi = Vec(d);
    int total = 1;
    for (int a = 0; a < d; ++a) {
      const long long k = c[a] >> 1;
      if (c[a] % 2 == 0) {
        b.cell0[a] = k - 1;
        b.cells[a] = 2;
        b.lo[a] = (k - r) * l;
        b.hi[a] = (k + r) * l;
      } else {
        b.cell0[a] = k;
        b.cells[a] = 1;
        b.lo[a] = (k + r) * l;
        b.hi[a] = (k + 1 - r) * l;
      }
      total *= b.cells[a];
    }
    std::array<unsigned char, kMaxDim> o{};
    while (true) {
      DyadicIndex q;
      q.level = G.level;
      q.d = d;
      for (int a = 0; a < d; ++a) q.k[a] = b.cell0[a] + o[a];
      if (G.index.count(q)) b.in_dprime.push_back(o);
      int a = 0;
      while (a < d && ++o[a] == b.cells[a]) o[a++] = 0;
      if (a == d) break;
    }
    const int in = static_cast<int>(b.in_dprime.size());
    if (in == 0 || in == total) continue;
    bool overlap = true;
    for (int a = 0; a < d; ++a) overlap = overlap && b.lo[a] < G.f.support.hi[a] && b.hi[a] > G.f.support.lo[a];
    if (!overlap) continue;
    G.band_boxes.push_back(std::move(b));
  }
}

// Band boxes, their moments and the cluster tree above them.
void build_band(HarmonicApproximant& G) {
  const int d = G.d;
  const BumpPartition P(d, G.level);
  G.band_boxes.clear();
  G.band.clear();
  G.band_children.clear();
  G.band_roots.clear();
  G.band_coef.clear();
  G.band_err.clear();
  enumerate_band(G, P);
  const std::size_t nb = G.band_boxes.size();
  if (nb == 0) return;
  const int PL = G.opt.leaf_order, PC = std::max(G.opt.cluster_order, PL);
  const MultiIndexSet set(d, PC);
  const std::size_t sL = set.count_upto(PL), sC = set.count_upto(PC), sE = set.count_upto(2);
  const int nh = G.opt.band_nodes, nl = std::max(2, nh - 1);

  // leaves
  G.band.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    BandNode& n = G.band[i];
    const BandBox& b = G.band_boxes[i];
    n.center = (b.lo + b.hi) * 0.5;
    n.radius = 0.5 * (b.hi - b.lo).norm();
    n.order = PL;
    n.box = static_cast<int>(i);
  }
  // groups of nodes per level, keyed by the enclosing cell of size 2^m ell
  std::vector<int> current(nb);
  for (std::size_t i = 0; i < nb; ++i) current[i] = static_cast<int>(i);
  // dense order-PC moments for the current level (compressed), plus error moments
  std::vector<double> mom(nb * sC), emom(nb * sE);
  std::size_t evals = 0;
  {
    std::vector<std::size_t> ev(nb);
    parallel_for(nb, [&](std::size_t i) {
      BoxNodes nd;
      std::vector<double> T, Tl;
      band_box_nodes(G, P, G.band_boxes[i], nh, nd);
      band_box_moments(nd, G.band[i].center, d, PC, T);
      compress(T, d, PC, set, PC, &mom[i * sC]);
      ev[i] = nd.count;
      band_box_nodes(G, P, G.band_boxes[i], nl, nd);
      band_box_moments(nd, G.band[i].center, d, 2, Tl);
      std::vector<double> Th;
      expand(&mom[i * sC], d, 2, set, 2, Th);
      for (std::size_t k = 0; k < Th.size(); ++k) Th[k] -= Tl[k];
      compress(Th, d, 2, set, 2, &emom[i * sE]);
      ev[i] += nd.count;
    });
    for (auto e : ev) evals += e;
  }
  G.evaluations += evals;
  // per node storage, filled as levels complete
  std::vector<std::vector<double>> node_m(nb), node_e(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    node_m[i].assign(mom.begin() + i * sC, mom.begin() + (i + 1) * sC);
    node_e[i].assign(emom.begin() + i * sE, emom.begin() + (i + 1) * sE);
  }
  mom.clear();
  mom.shrink_to_fit();
  double cell = G.ell;
  while (current.size() > 1) {
    cell *= 2;
    std::map<std::vector<long long>, std::vector<int>> groups;
    for (int id : current) {
      std::vector<long long> key(d);
      for (int a = 0; a < d; ++a) key[a] = static_cast<long long>(std::floor(G.band[id].center[a] / cell));
      groups[key].push_back(id);
    }
    if (groups.size() == current.size() && cell > 4 * G.K.bounding.edge) break;
    std::vector<int> next;
    std::vector<std::vector<int>> members;
    for (auto& kv : groups) members.push_back(std::move(kv.second));
    const std::size_t base = G.band.size();
    G.band.resize(base + members.size());
    node_m.resize(base + members.size());
    node_e.resize(base + members.size());
    for (std::size_t g = 0; g < members.size(); ++g) {
      BandNode& n = G.band[base + g];
      Vec lo = G.band[members[g][0]].center, hi = lo;
      for (int c : members[g]) {
        const BandNode& ch = G.band[c];
        for (int a = 0; a < d; ++a) {
          lo[a] = std::min(lo[a], ch.center[a]);
          hi[a] = std::max(hi[a], ch.center[a]);
        }
      }
      n.center = (lo + hi) * 0.5;
      for (int c : members[g]) n.radius = std::max(n.radius, (G.band[c].center - n.center).norm() + G.band[c].radius);
      n.order = PC;
      n.child_begin = static_cast<int>(G.band_children.size());
      G.band_children.insert(G.band_children.end(), members[g].begin(), members[g].end());
      n.child_end = static_cast<int>(G.band_children.size());
      next.push_back(static_cast<int>(base + g));
    }
    parallel_for(members.size(), [&](std::size_t g) {
      const BandNode& n = G.band[base + g];
      std::vector<double> acc(dense_size(d, PC), 0.0), acce(dense_size(d, 2), 0.0), T;
      for (int c : members[g]) {
        expand(node_m[c].data(), d, PC, set, PC, T);
        shift_dense(T, d, PC, G.band[c].center - n.center);
        for (std::size_t k = 0; k < T.size(); ++k) acc[k] += T[k];
        expand(node_e[c].data(), d, 2, set, 2, T);
        shift_dense(T, d, 2, G.band[c].center - n.center);
        for (std::size_t k = 0; k < T.size(); ++k) acce[k] += T[k];
      }
      node_m[base + g].resize(sC);
      compress(acc, d, PC, set, PC, node_m[base + g].data());
      node_e[base + g].resize(sE);
      compress(acce, d, 2, set, 2, node_e[base + g].data());
    });
    current.swap(next);
  }
  G.band_roots = current;
  // moments -> coefficients of d^beta E0(t - center)
  const double C = newton_constant(d);
  for (std::size_t i = 0; i < G.band.size(); ++i) {
    BandNode& n = G.band[i];
    const std::size_t cnt = n.box >= 0 ? sL : sC;
    n.coef = G.band_coef.size();
    n.err = G.band_err.size();
    for (std::size_t a = 0; a < cnt; ++a)
      G.band_coef.push_back(-C * ((set.order(a) % 2) ? -1.0 : 1.0) / set.factorial(a) * node_m[i][a]);
    for (std::size_t a = 0; a < sE; ++a) G.band_err.push_back(std::abs(C / set.factorial(a) * node_e[i][a]));
    std::vector<double>().swap(node_m[i]);
  }
}

// Moments, F_Q and center expansions of one cube.
void cube_data(HarmonicApproximant& G, const BumpPartition& P, std::size_t i, std::size_t& evals) {
  const int d = G.d;
  const DyadicIndex& q = G.cubes[i];
  const MultiIndexSet set(d, G.acc_order), set1(d, 1);
  const double Cd = std::abs(newton_constant(d));
  const CubeMoments cm = compute_moments(G.f, P, q, G.centers[i], G.acc_order, G.opt.moments);
  evals = cm.evaluations;
  const auto coef = coefficients_from_moments(cm.M, d, G.acc_order);
  for (std::size_t a = 0; a < G.acc_stride; ++a) {
    G.acc_coef[i * G.acc_stride + a] = coef[a];
    G.acc_err[i * G.acc_stride + a] = Cd / set.factorial(a) * cm.error[a];
  }
  MultipoleExpansion& e = G.F[i];
  e.d = d;
  e.cube = q;
  e.ell = G.ell;
  e.pole = G.balls[i].center;
  e.order = 1;
  e.coef = coefficients_from_moments(translate_moments(cm.M, d, G.acc_order, G.centers[i], e.pole, 1), d, 1);
  // the translated order-1 moments inherit the errors of M_0 and M_{e_k}
  const Vec s = G.centers[i] - e.pole;
  const double e0 = cm.error[0];
  G.F_err[i * (d + 1)] = Cd * e0;
  for (int k = 0; k < d; ++k) {
    MultiIndex a{};
    a[k] = 1;
    G.F_err[i * (d + 1) + set1.index(a)] = Cd * (cm.error[set.index(a)] + std::abs(s[k]) * e0);
  }
}

void init_common(HarmonicApproximant& G) {
  const BumpPartition P(G.d, G.level);
  G.support_radius = std::sqrt(static_cast<double>(G.d)) * (0.5 + P.r()) * G.ell;
  G.acc_stride = mi_count(G.d, G.acc_order);
}

}  // namespace

// ---- build -------------------------------------------------------------------

HarmonicApproximant build_approximant(const ScalarField& f, const PorousCompact& K, int level,
                                      const ApproximantOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  if (f.d != K.d) throw InvalidArgument("field and compact dimensions differ");
  if (K.d < 3) throw InvalidArgument("approximants need d >= 3");
  HarmonicApproximant G;
  G.d = K.d;
  G.level = level;
  G.ell = std::ldexp(1.0, -level);
  if (!(G.ell <= 0.25)) throw InvalidArgument("approximant levels need 2^-j <= 1/4");
  G.K = K;
  G.f = f;
  G.opt = opt;
  G.porosity = search_porosity(K);
  G.delta = std::min(2 * G.porosity * G.ell, G.ell / 2);
  G.acc_order = opt.light ? opt.light_order : opt.center_order;
  if (G.acc_order < 1) throw InvalidArgument("center expansion order must be at least 1");
  init_common(G);

  const NearCubes nc = cubes_meeting_K(level, K);
  G.cubes = nc.Dprime;
  const std::size_t n = G.cubes.size();
  for (std::size_t i = 0; i < n; ++i) G.index.emplace(G.cubes[i], static_cast<int>(i));
  G.balls.resize(n);
  G.centers.resize(n);
  G.F.resize(n);
  G.F_err.assign(n * (G.d + 1), 0.0);
  G.acc_coef.assign(n * G.acc_stride, 0.0);
  G.acc_err.assign(n * G.acc_stride, 0.0);
  std::vector<std::size_t> evals(n, 0);
  const BumpPartition P(G.d, level);
  parallel_for(n, [&](std::size_t i) {
    G.centers[i] = G.cubes[i].cube().center();
    G.balls[i] = find_porosity_ball(G.cubes[i].cube(), K);
    cube_data(G, P, i, evals[i]);
  });
  for (auto e : evals) G.evaluations += e;
  if (!opt.light) build_band(G);
  G.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return G;
}

// ---- evaluation contexts -------------------------------------------------------

EvalContext::EvalContext(const HarmonicApproximant& G, const Vec& t0) : G_(&G), t0_(t0) {
  if (G.opt.light) throw InvalidArgument("light approximants support shell diagnostics only");
  const int d = G.d;
  const double v = G.opt.valid_radius * G.ell;
  const double lt = std::log(G.opt.expansion_tol);
  std::vector<int> direct, stack(G.band_roots.begin(), G.band_roots.end());
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const BandNode& n = G.band[id];
    const double D = (t0 - n.center).norm() - v;
    if (D > n.radius) {
      const double q = n.radius / D;
      const int p = q > 0 ? std::max(0, static_cast<int>(std::ceil(lt / std::log(q))) - 1) : 0;
      if (p <= n.order) {
        accepted_.push_back(id);
        accepted_order_.push_back(p);
        continue;
      }
    }
    if (n.box >= 0) direct.push_back(n.box);
    else
      for (int c = n.child_begin; c < n.child_end; ++c) stack.push_back(G.band_children[c]);
  }
  direct_boxes_ = direct.size();
  const BumpPartition P(d, G.level);
  const double C = newton_constant(d);
  const int nl = std::max(2, G.opt.band_nodes - 1);
  BoxNodes nd;
  double hi = 0, lo = 0;
  auto potential = [&](const BoxNodes& b) {
    double s = 0;
    for (std::size_t k = 0; k < b.count; ++k) {
      const double* y = &b.y[k * d];
      const double* B = &b.B[k * d];
      double r2 = 0, wb = 0;
      for (int a = 0; a < d; ++a) {
        const double w = t0[a] - y[a];
        r2 += w * w;
        wb += w * B[a];
      }
      const double rd = inv_pow_d(r2, d);
      s += r2 * rd * b.A[k] + 2 * (d - 2) * rd * wb;
    }
    return s;
  };
  for (int b : direct) {
    band_box_nodes(G, P, G.band_boxes[b], G.opt.band_nodes, nd);
    for (std::size_t k = 0; k < nd.count; ++k) {
      if (nd.A[k] == 0 && std::all_of(&nd.B[k * d], &nd.B[k * d] + d, [](double x) { return x == 0; })) continue;
      by_.insert(by_.end(), &nd.y[k * d], &nd.y[k * d] + d);
      bA_.push_back(nd.A[k]);
      bB_.insert(bB_.end(), &nd.B[k * d], &nd.B[k * d] + d);
    }
    hi += potential(nd);
    band_box_nodes(G, P, G.band_boxes[b], nl, nd);
    lo += potential(nd);
  }
  band_err_ = std::abs(C) * std::abs(hi - lo);
}

bool EvalContext::covers(const Vec& t) const { return (t - t0_).norm() <= G_->opt.valid_radius * G_->ell; }

double EvalContext::value(const Vec& t, double* error) const {
  if (!covers(t)) throw InvalidArgument("point outside the evaluation context");
  const HarmonicApproximant& G = *G_;
  const int d = G.d;
  const double C = newton_constant(d);
  double s = 0;
  const std::size_t nb = bA_.size();
  for (std::size_t k = 0; k < nb; ++k) {
    const double* y = &by_[k * d];
    const double* B = &bB_[k * d];
    double r2 = 0, wb = 0;
    for (int a = 0; a < d; ++a) {
      const double w = t[a] - y[a];
      r2 += w * w;
      wb += w * B[a];
    }
    const double rd = inv_pow_d(r2, d);
    s += r2 * rd * bA_[k] + 2 * (d - 2) * rd * wb;
  }
  double val = -C * s, err = band_err_;
  const int PC = std::max(G.opt.cluster_order, G.opt.leaf_order);
  const KernelTable& kt = kernel_table(d, PC);
  const MultiIndexSet& set = kt.indices();
  const std::size_t sE = set.count_upto(2);
  thread_local std::vector<double> buf;
  buf.resize(set.size());
  for (std::size_t m = 0; m < accepted_.size(); ++m) {
    const BandNode& n = G.band[accepted_[m]];
    const int p = accepted_order_[m];
    const Vec w = t - n.center;
    kt.eval(w, std::max(p, 2), buf.data());
    const double* c = &G.band_coef[n.coef];
    const std::size_t cnt = set.count_upto(p), last = set.count_upto(p - 1);
    double v = 0, tail = 0;
    for (std::size_t a = 0; a < cnt; ++a) {
      v += c[a] * buf[a];
      if (a >= last) tail += std::abs(c[a] * buf[a]);
    }
    const double* e = &G.band_err[n.err];
    for (std::size_t a = 0; a < sE; ++a) err += e[a] * std::abs(buf[a]);
    const double q = n.radius / w.norm();
    val += v;
    err += tail * q / (1 - q);
  }
  for (std::size_t i = 0; i < G.cubes.size(); ++i) {
    const Vec w = t - G.F[i].pole;
    const double r2 = w.norm2(), rd = inv_pow_d(r2, d);
    const double* c = G.F[i].coef.data();
    const double* ce = &G.F_err[i * (d + 1)];
    double fv = c[0] * r2 * rd, fe = ce[0] * r2 * rd;
    for (int a = 0; a < d; ++a) {
      const double k = (2 - d) * w[a] * rd;
      fv += c[1 + a] * k;
      fe += ce[1 + a] * std::abs(k);
    }
    val += fv;
    err += fe;
  }
  if (error) *error = err;
  return val;
}

Vec EvalContext::gradient(const Vec& t) const {
  if (!covers(t)) throw InvalidArgument("point outside the evaluation context");
  const HarmonicApproximant& G = *G_;
  const int d = G.d;
  const double C = newton_constant(d);
  Vec g(d);
  const std::size_t nb = bA_.size();
  for (std::size_t k = 0; k < nb; ++k) {
    const double* y = &by_[k * d];
    const double* B = &bB_[k * d];
    double w[kMaxDim];
    double r2 = 0, wb = 0;
    for (int a = 0; a < d; ++a) {
      w[a] = t[a] - y[a];
      r2 += w[a] * w[a];
      wb += w[a] * B[a];
    }
    const double rd = inv_pow_d(r2, d);
    // grad_t of |w|^{2-d} A + 2(d-2)|w|^{-d} (w.B)
    for (int a = 0; a < d; ++a)
      g[a] -= C * ((2 - d) * rd * w[a] * bA_[k] + 2 * (d - 2) * (rd * B[a] - d * rd / r2 * wb * w[a]));
  }
  const int PC = std::max(G.opt.cluster_order, G.opt.leaf_order);
  const KernelTable& kt = kernel_table(d, PC + 1);
  const MultiIndexSet& big = kt.indices();
  thread_local std::vector<double> buf;
  buf.resize(big.size());
  for (std::size_t m = 0; m < accepted_.size(); ++m) {
    const BandNode& n = G.band[accepted_[m]];
    const int p = accepted_order_[m];
    kt.eval(t - n.center, p + 1, buf.data());
    const double* c = &G.band_coef[n.coef];
    const std::size_t cnt = big.count_upto(p);
    for (std::size_t a = 0; a < cnt; ++a) {
      MultiIndex al = big[a];
      for (int k = 0; k < d; ++k) {
        ++al[k];
        g[k] += c[a] * buf[big.index(al)];
        --al[k];
      }
    }
  }
  for (std::size_t i = 0; i < G.cubes.size(); ++i) {
    const Vec w = t - G.F[i].pole;
    const double r2 = w.norm2(), rd = inv_pow_d(r2, d);
    const double* c = G.F[i].coef.data();
    for (int k = 0; k < d; ++k) {
      double v = c[0] * (2 - d) * w[k] * rd;
      for (int a = 0; a < d; ++a) v += c[1 + a] * (2 - d) * ((a == k ? rd : 0.0) - d * w[a] * w[k] * rd / r2);
      g[k] += v;
    }
  }
  return g;
}

namespace {

void check_in_neighborhood(const HarmonicApproximant& G, const Vec& t) {
  if (!(G.K.dist(t) < G.delta)) throw InvalidArgument("evaluation point outside K_delta");
}

// Anchor of the level-(j+1) cell containing t.
Vec cell_anchor(const HarmonicApproximant& G, const Vec& t) {
  const double h = G.ell / 2;
  Vec a(G.d);
  for (int i = 0; i < G.d; ++i) a[i] = (std::floor(t[i] / h) + 0.5) * h;
  return a;
}

// Groups item indices by anchor cell, in first-appearance order.
std::vector<std::pair<Vec, std::vector<std::size_t>>> group_by_cell(const HarmonicApproximant& G,
                                                                    const std::vector<Vec>& keys) {
  std::map<std::vector<long long>, std::size_t> slot;
  std::vector<std::pair<Vec, std::vector<std::size_t>>> groups;
  const double h = G.ell / 2;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::vector<long long> key(G.d);
    for (int a = 0; a < G.d; ++a) key[a] = static_cast<long long>(std::floor(keys[i][a] / h));
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(key, groups.size());
      groups.push_back({cell_anchor(G, keys[i]), {i}});
    } else {
      groups[it->second].second.push_back(i);
    }
  }
  return groups;
}

}  // namespace

double evaluate(const HarmonicApproximant& G, const Vec& t, double* error) {
  check_in_neighborhood(G, t);
  const EvalContext ctx(G, cell_anchor(G, t));
  return ctx.value(t, error);
}

Vec gradient(const HarmonicApproximant& G, const Vec& t) {
  check_in_neighborhood(G, t);
  const EvalContext ctx(G, cell_anchor(G, t));
  return ctx.gradient(t);
}

std::vector<PointValue> evaluate_batch(const HarmonicApproximant& G, const std::vector<Vec>& pts, bool with_gradient) {
  for (const auto& t : pts) check_in_neighborhood(G, t);
  const auto groups = group_by_cell(G, pts);
  std::vector<PointValue> out(pts.size());
  parallel_for(groups.size(), [&](std::size_t gi) {
    const EvalContext ctx(G, groups[gi].first);
    for (std::size_t i : groups[gi].second) {
      PointValue& pv = out[i];
      pv.point = pts[i];
      pv.value = ctx.value(pts[i], &pv.error);
      if (with_gradient) pv.grad = ctx.gradient(pts[i]);
    }
  });
  return out;
}

// ---- diagnostics -----------------------------------------------------------------

namespace {

// sum over cubes with |t - pole| > 8 ell d sqrt(d) of (V - F), through the
// center expansions, plus the optional shell table.
double far_pole_sum(const HarmonicApproximant& G, const Vec& t, std::size_t& count, std::vector<ShellRow>* shells) {
  const int d = G.d;
  const double unit = G.ell * d * std::sqrt(static_cast<double>(d));
  const double R8 = 8 * unit;
  const KernelTable& kt = kernel_table(d, G.acc_order);
  thread_local std::vector<double> buf;
  buf.resize(kt.indices().size());
  double total = 0;
  count = 0;
  for (std::size_t i = 0; i < G.cubes.size(); ++i) {
    const double R = (t - G.F[i].pole).norm();
    if (R <= R8) continue;
    const Vec w = t - G.centers[i];
    const double q = G.support_radius / w.norm();
    int p = G.acc_order;
    if (q < 1) p = std::clamp(static_cast<int>(std::ceil(std::log(1e-10) / std::log(q))) - 1, 0, G.acc_order);
    kt.eval(w, p, buf.data());
    double v = 0;
    const double* c = &G.acc_coef[i * G.acc_stride];
    for (std::size_t a = 0; a < kt.indices().count_upto(p); ++a) v += c[a] * buf[a];
    const double diff = v - G.F[i].value(t);
    total += diff;
    ++count;
    if (shells) {
      const int k = static_cast<int>(std::floor(std::log2(R / unit)));
      auto it = std::find_if(shells->begin(), shells->end(), [k](const ShellRow& s) { return s.k == k; });
      if (it == shells->end()) {
        shells->push_back(ShellRow{});
        it = shells->end() - 1;
        it->k = k;
      }
      ++it->count;
      it->sum += diff;
      it->abs_sum += std::abs(diff);
    }
  }
  return total;
}

}  // namespace

ErrorReport sup_error(const HarmonicApproximant& G, const std::vector<Vec>& pts, double fnorm,
                      const ContinuityModulus& w) {
  const auto vals = evaluate_batch(G, pts, false);
  ErrorReport rep;
  rep.points = pts.size();
  std::vector<double> i2(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    std::size_t cnt = 0;
    i2[i] = far_pole_sum(G, pts[i], cnt, nullptr);
  });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double diff = G.f.value(pts[i]) - vals[i].value;
    if (std::abs(diff) > rep.sup_error || i == 0) {
      rep.sup_error = std::abs(diff);
      rep.argmax = pts[i];
    }
    rep.max_error_estimate = std::max(rep.max_error_estimate, vals[i].error);
    rep.i2 = std::max(rep.i2, std::abs(i2[i]));
    rep.i1 = std::max(rep.i1, std::abs(diff - i2[i]));
  }
  const double scale = fnorm * w(G.delta);
  rep.jackson_ratio = scale > 0 ? rep.sup_error / scale : 0.0;
  return rep;
}

NeighborhoodGrid neighborhood_grid(const PorousCompact& K, double limit, double spacing, double radius,
                                   const std::vector<Vec>& anchors) {
  NeighborhoodGrid g;
  g.delta = limit;
  g.spacing = spacing;
  const int d = K.d;
  const int M = static_cast<int>(std::floor(radius / spacing + 1e-9));
  const int side = 2 * M + 1;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(side);
  std::set<std::vector<long long>> seen;
  for (const auto& a : anchors) {
    for (std::size_t m = 0; m < total; ++m) {
      Vec x = a;
      std::size_t r = m;
      for (int i = 0; i < d; ++i) {
        x[i] += (static_cast<long long>(r % side) - M) * spacing;
        r /= side;
      }
      if (!(K.dist(x) + 2 * K.eta < limit)) continue;
      std::vector<long long> key(d);
      for (int i = 0; i < d; ++i) key[i] = std::llround(x[i] / spacing * 8);
      if (seen.insert(key).second) g.points.push_back(x);
    }
  }
  return g;
}

GradientReport sup_gradient(const HarmonicApproximant& G, const NeighborhoodGrid& grid, double fnorm,
                            const ContinuityModulus& w) {
  const auto vals = evaluate_batch(G, grid.points, true);
  GradientReport rep;
  rep.points = vals.size();
  for (const auto& v : vals) {
    const double m = v.grad.norm();
    if (m > rep.sup_gradient) {
      rep.sup_gradient = m;
      rep.argmax = v.point;
    }
  }
  const double scale = fnorm * w(G.delta) / G.delta;
  rep.bernstein_ratio = scale > 0 ? rep.sup_gradient / scale : 0.0;
  return rep;
}

HarmonicityReport harmonicity_residual(const HarmonicApproximant& G, const NeighborhoodGrid& grid, double h,
                                       double h0) {
  const int d = G.d;
  std::vector<std::size_t> ok;
  HarmonicityReport rep;
  const double reach = std::max(h, 2 * h0);
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    bool inside = true;
    for (int a = 0; a < d && inside; ++a)
      for (double s : {-reach, reach}) {
        Vec y = grid.points[i];
        y[a] += s;
        inside = inside && G.K.dist(y) + 2 * G.K.eta < G.delta;
      }
    if (inside) ok.push_back(i);
    else ++rep.skipped;
  }
  std::vector<Vec> keys;
  for (auto i : ok) keys.push_back(grid.points[i]);
  const auto groups = group_by_cell(G, keys);
  std::vector<double> res(keys.size(), 0.0);
  parallel_for(groups.size(), [&](std::size_t gi) {
    const EvalContext ctx(G, groups[gi].first);
    for (std::size_t k : groups[gi].second) {
      const Vec& x = keys[k];
      const double g0 = ctx.value(x);
      double lap = 0, s4 = 0;
      for (int a = 0; a < d; ++a) {
        auto at = [&](double s) {
          Vec y = x;
          y[a] += s;
          return ctx.value(y);
        };
        lap += at(h) + at(-h) - 2 * g0;
        s4 += std::abs(at(2 * h0) - 4 * at(h0) + 6 * g0 - 4 * at(-h0) + at(-2 * h0));
      }
      lap /= h * h;
      s4 /= h0 * h0 * h0 * h0;
      res[k] = s4 > 0 ? std::abs(lap) / s4 : 0.0;
    }
  });
  rep.used = keys.size();
  for (double r : res) rep.residual = std::max(rep.residual, r);
  return rep;
}

SplittingDiagnostics splitting_diagnostics(const HarmonicApproximant& G, const Vec& t, double lambda,
                                           double C_lambda) {
  SplittingDiagnostics out;
  out.I2 = far_pole_sum(G, t, out.n2, &out.shells);
  out.n1 = G.cubes.size() - out.n2;
  std::sort(out.shells.begin(), out.shells.end(), [](const ShellRow& a, const ShellRow& b) { return a.k < b.k; });
  const int d = G.d;
  for (auto& s : out.shells)
    s.covering_bound = std::pow(3.0, d) * C_lambda * std::pow(std::ldexp(1.0, s.k + 2) * d * std::sqrt(double(d)), lambda);
  if (!G.opt.light) out.I1 = G.f.value(t) - evaluate(G, t) - out.I2;
  return out;
}

RepresentationCheck representation_check(const HarmonicApproximant& G, const Vec& t, const QuadOptions& opt) {
  RepresentationCheck rc;
  rc.subtraction = evaluate(G, t, &rc.subtraction_error);
  const BumpPartition P(G.d, G.level);
  std::vector<DyadicIndex> far;
  for (const auto& q : cubes_touching_support(G.f, G.K.bounding, G.level))
    if (!G.index.count(q)) far.push_back(q);
  rc.far_cubes = far.size();
  std::vector<LocalizationValue> v(far.size());
  parallel_for(far.size(), [&](std::size_t i) { v[i] = localize(G.f, P, far[i], t, opt); });
  double O = 0, err = 0;
  for (const auto& x : v) {
    O += x.value;
    err += x.error_estimate;
  }
  double Fl = 0;
  for (const auto& e : G.F) Fl += e.value(t);
  rc.direct = O + Fl;
  rc.direct_error = err;
  return rc;
}

Certificate certify_lip_from_family(const std::vector<FamilyLevel>& family, const ContinuityModulus& w,
                                    const std::vector<Vec>& pts, const std::vector<double>& vals, double C1_scale,
                                    double C2_scale) {
  Certificate c;
  if (family.empty()) return c;
  for (const auto& L : family) {
    const double wd = w(L.delta);
    if (wd > 0) {
      c.C1 = std::max(c.C1, L.sup_error / wd);
      c.C2 = std::max(c.C2, L.sup_gradient * L.delta / wd);
    }
  }
  c.C1 *= C1_scale;
  c.C2 *= C2_scale;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double rho = dist(pts[i], pts[j]);
      if (rho <= 0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& L : family) {
        if (L.delta < rho / 2 || L.delta > 2 * rho) continue;
        const double wd = w(L.delta);
        best = std::min(best, (2 * c.C1 * wd + c.C2 * wd / L.delta * rho) / w(rho));
      }
      if (!std::isfinite(best)) {
        ++c.pairs_skipped;
        continue;
      }
      ++c.pairs_used;
      c.bound = std::max(c.bound, best);
      c.direct_on_pairs = std::max(c.direct_on_pairs, std::abs(vals[i] - vals[j]) / w(rho));
    }
  return c;
}

std::vector<Vec> select_samples(const PorousCompact& K, std::size_t cap, const std::vector<Vec>& hints,
                                std::size_t near_hint) {
  const auto& S = K.samples;
  std::set<std::size_t> chosen;
  if (!S.empty() && cap > 0) {
    const std::size_t stride = std::max<std::size_t>(1, (S.size() + cap - 1) / cap);
    for (std::size_t i = 0; i < S.size(); i += stride) chosen.insert(i);
  }
  if (!hints.empty() && near_hint > 0 && !S.empty()) {
    const KdTree tree(S);
    for (const auto& h : hints)
      for (auto i : tree.k_nearest(h, near_hint)) chosen.insert(i);
  }
  std::vector<Vec> out;
  for (auto i : chosen) out.push_back(S[i]);
  return out;
}

// ---- serialization -----------------------------------------------------------------

nlohmann::json HarmonicApproximant::to_json() const {
  nlohmann::json j;
  j["format"] = "harmapprox-approximant-1";
  j["d"] = d;
  j["level"] = level;
  j["ell"] = ell;
  j["delta"] = delta;
  j["porosity"] = porosity;
  j["center_order"] = acc_order;
  j["options"] = {{"valid_radius", opt.valid_radius},
                  {"band_nodes", opt.band_nodes},
                  {"leaf_order", opt.leaf_order},
                  {"cluster_order", opt.cluster_order},
                  {"expansion_tol", opt.expansion_tol},
                  {"light", opt.light},
                  {"transition_nodes", opt.moments.transition_nodes},
                  {"flat_nodes", opt.moments.flat_nodes}};
  j["field"] = f.descriptor;
  j["compact"] = K.descriptor;
  nlohmann::json cl = nlohmann::json::array();
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    nlohmann::json c;
    c["k"] = std::vector<long long>(cubes[i].k.begin(), cubes[i].k.begin() + d);
    c["ball"] = {{"center", balls[i].center.to_vector()}, {"radius", balls[i].radius},
                 {"dist_to_K", balls[i].dist_to_K}};
    c["F"] = F[i].coef;
    c["F_err"] = std::vector<double>(F_err.begin() + i * (d + 1), F_err.begin() + (i + 1) * (d + 1));
    c["center_coefficients"] =
        std::vector<double>(acc_coef.begin() + i * acc_stride, acc_coef.begin() + (i + 1) * acc_stride);
    c["center_errors"] = std::vector<double>(acc_err.begin() + i * acc_stride, acc_err.begin() + (i + 1) * acc_stride);
    cl.push_back(std::move(c));
  }
  j["cubes"] = std::move(cl);
  return j;
}

HarmonicApproximant approximant_from_json(const nlohmann::json& j, const PorousCompact& K, const ScalarField& f) {
  if (j.value("format", "") != "harmapprox-approximant-1") throw InvalidArgument("not an approximant serialization");
  HarmonicApproximant G;
  G.d = j.at("d").get<int>();
  if (G.d != K.d || G.d != f.d) throw InvalidArgument("dimension mismatch in approximant serialization");
  G.level = j.at("level").get<int>();
  G.ell = j.at("ell").get<double>();
  G.delta = j.at("delta").get<double>();
  G.porosity = j.at("porosity").get<double>();
  G.acc_order = j.at("center_order").get<int>();
  const auto& o = j.at("options");
  G.opt.leaf_order = o.at("leaf_order").get<int>();
  G.opt.cluster_order = o.at("cluster_order").get<int>();
  G.opt.valid_radius = o.at("valid_radius").get<double>();
  G.opt.band_nodes = o.at("band_nodes").get<int>();
  G.opt.expansion_tol = o.at("expansion_tol").get<double>();
  G.opt.light = o.at("light").get<bool>();
  G.opt.moments.transition_nodes = o.at("transition_nodes").get<int>();
  G.opt.moments.flat_nodes = o.at("flat_nodes").get<int>();
  if (G.opt.light) G.opt.light_order = G.acc_order;
  else G.opt.center_order = G.acc_order;
  G.K = K;
  G.f = f;
  init_common(G);
  for (const auto& c : j.at("cubes")) {
    DyadicIndex q;
    q.level = G.level;
    q.d = G.d;
    const auto k = c.at("k").get<std::vector<long long>>();
    for (int i = 0; i < G.d; ++i) q.k[i] = k.at(i);
    const std::size_t i = G.cubes.size();
    G.cubes.push_back(q);
    G.index.emplace(q, static_cast<int>(i));
    G.centers.push_back(q.cube().center());
    PorosityBall b;
    b.center = Vec::from(c.at("ball").at("center").get<std::vector<double>>());
    b.radius = c.at("ball").at("radius").get<double>();
    b.dist_to_K = c.at("ball").at("dist_to_K").get<double>();
    G.balls.push_back(b);
    MultipoleExpansion e;
    e.d = G.d;
    e.cube = q;
    e.ell = G.ell;
    e.pole = b.center;
    e.order = 1;
    e.coef = c.at("F").get<std::vector<double>>();
    G.F.push_back(e);
    for (double v : c.at("F_err").get<std::vector<double>>()) G.F_err.push_back(v);
    const auto cc = c.at("center_coefficients").get<std::vector<double>>();
    const auto ce = c.at("center_errors").get<std::vector<double>>();
    if (cc.size() != G.acc_stride || ce.size() != G.acc_stride || e.coef.size() != static_cast<std::size_t>(G.d + 1))
      throw InvalidArgument("coefficient count mismatch in approximant serialization");
    G.acc_coef.insert(G.acc_coef.end(), cc.begin(), cc.end());
    G.acc_err.insert(G.acc_err.end(), ce.begin(), ce.end());
  }
  if (!G.opt.light) build_band(G);
  return G;
}

}  // namespace ha
