#include "harmapprox/field.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "harmapprox/kdtree.hpp"
#include "harmapprox/partition.hpp"
#include "harmapprox/quadrature.hpp"

namespace ha {

namespace {

Box infinite_box(int d) { return Box{Vec(d, -1e300), Vec(d, 1e300)}; }

Box box_union(const Box& a, const Box& b) {
  Box r = a;
  for (int i = 0; i < a.lo.d; ++i) {
    r.lo[i] = std::min(a.lo[i], b.lo[i]);
    r.hi[i] = std::max(a.hi[i], b.hi[i]);
  }
  return r;
}

}  // namespace

Vec ScalarField::grad_or_fd(const Vec& x, double h) const {
  if (gradient) return gradient(x);
  Vec g(d);
  for (int i = 0; i < d; ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (value(a) - value(b)) / (2 * h);
  }
  return g;
}

double smooth_step(double u, int k) {
  // 126u^5 - 420u^6 + 540u^7 - 315u^8 + 70u^9, four continuous derivatives at both ends
  if (u <= 0 || u >= 1) return k == 0 && u >= 1 ? 1.0 : 0.0;
  const double u2 = u * u, u3 = u2 * u;
  if (k == 0) return u2 * u3 * (126 + u * (-420 + u * (540 + u * (-315 + u * 70))));
  const double v = 1 - u;
  if (k == 1) return 630 * u2 * u2 * v * v * v * v;
  return 2520 * u3 * v * v * v * (1 - 2 * u);
}

double PlateauCutoff::value(const Vec& x) const { return eval(x, nullptr, nullptr); }

double PlateauCutoff::eval(const Vec& x, Vec* grad, double* lap) const {
  const int d = lo.d;
  const double w = inner - outer;
  std::array<double, kMaxDim> c{}, c1{}, c2{};
  double prod = 1;
  for (int i = 0; i < d; ++i) {
    const double u1 = (x[i] - lo[i] - outer) / w, u2 = (hi[i] - outer - x[i]) / w;
    const double a = smooth_step(u1), b = smooth_step(u2);
    c[i] = a * b;
    prod *= c[i];
    if (grad || lap) {
      const double a1 = smooth_step(u1, 1) / w, b1 = -smooth_step(u2, 1) / w;
      const double a2 = smooth_step(u1, 2) / (w * w), b2 = smooth_step(u2, 2) / (w * w);
      c1[i] = a1 * b + a * b1;
      c2[i] = a2 * b + 2 * a1 * b1 + a * b2;
    }
  }
  if (grad) {
    *grad = Vec(d);
    for (int i = 0; i < d; ++i) {
      double p = c1[i];
      for (int k = 0; k < d; ++k)
        if (k != i) p *= c[k];
      (*grad)[i] = p;
    }
  }
  if (lap) {
    double s = 0;
    for (int i = 0; i < d; ++i) {
      double p = c2[i];
      for (int k = 0; k < d; ++k)
        if (k != i) p *= c[k];
      s += p;
    }
    *lap = s;
  }
  return prod;
}

Box PlateauCutoff::support() const {
  Box b{lo, hi};
  for (int i = 0; i < lo.d; ++i) {
    b.lo[i] += outer;
    b.hi[i] -= outer;
  }
  return b;
}

PlateauCutoff standard_cutoff(const Cube& R0) {
  PlateauCutoff c;
  c.lo = R0.corner;
  c.hi = R0.box().hi;
  c.inner = R0.edge / 8;
  c.outer = R0.edge / 32;
  return c;
}

std::vector<std::vector<double>> PlateauCutoff::breaks() const {
  std::vector<std::vector<double>> b(lo.d);
  for (int i = 0; i < lo.d; ++i) b[i] = {lo[i] + outer, lo[i] + inner, hi[i] - inner, hi[i] - outer};
  return b;
}

ScalarField constant_field(int d, double c, const Cube&) {
  ScalarField f;
  f.d = d;
  f.value = [c](const Vec&) { return c; };
  f.gradient = [d](const Vec&) { return Vec(d); };
  f.laplacian = [](const Vec&) { return 0.0; };
  f.support = c == 0 ? Box{Vec(d), Vec(d)} : infinite_box(d);
  f.descriptor = {{"kind", "constant"}, {"value", c}};
  return f;
}

ScalarField linear_field(const Vec& a, double b, const Cube&) {
  ScalarField f;
  f.d = a.d;
  f.value = [a, b](const Vec& x) { return a.dot(x) + b; };
  f.gradient = [a](const Vec&) { return a; };
  f.laplacian = [](const Vec&) { return 0.0; };
  f.support = infinite_box(a.d);
  f.descriptor = {{"kind", "linear"}, {"a", a.to_vector()}, {"b", b}};
  return f;
}

ScalarField radial_power_field(double s, const Vec& x0, const Cube& R0) {
  if (!(s > 0 && s <= 1)) throw InvalidArgument("radial power exponent must lie in (0,1]");
  const int d = x0.d;
  const PlateauCutoff cut = standard_cutoff(R0);
  ScalarField f;
  f.d = d;
  f.value = [=](const Vec& x) {
    const double c = cut.value(x);
    return c == 0 ? 0.0 : c * std::pow((x - x0).norm(), s);
  };
  f.gradient = [=](const Vec& x) {
    Vec gc;
    const double c = cut.eval(x, &gc, nullptr);
    const Vec y = x - x0;
    const double r = y.norm();
    if (r == 0) return Vec(d, std::numeric_limits<double>::quiet_NaN());
    const double rs = std::pow(r, s);
    return gc * rs + y * (c * s * rs / (r * r));
  };
  f.laplacian = [=](const Vec& x) {
    Vec gc;
    double lc = 0;
    const double c = cut.eval(x, &gc, &lc);
    const Vec y = x - x0;
    const double r = y.norm();
    if (r == 0) return std::numeric_limits<double>::quiet_NaN();
    const double rs = std::pow(r, s), rs2 = rs / (r * r);
    return lc * rs + 2 * s * rs2 * gc.dot(y) + c * s * (s + d - 2) * rs2;
  };
  f.support = cut.support();
  f.singular_points = {x0};
  f.axis_breaks = cut.breaks();
  f.descriptor = {{"kind", "radial_power"}, {"s", s}, {"x0", x0.to_vector()}};
  return f;
}

ScalarField smooth_bump_field(const Vec& c, double rho, double amp) {
  const int d = c.d;
  ScalarField f;
  f.d = d;
  const double r2 = rho * rho;
  f.value = [=](const Vec& x) { return amp * exp_bump_sq((x - c).norm2() / r2); };
  f.gradient = [=](const Vec& x) {
    const Vec y = x - c;
    return y * (amp * exp_bump_sq(y.norm2() / r2, 1) * 2 / r2);
  };
  f.laplacian = [=](const Vec& x) {
    const Vec y = x - c;
    const double u = y.norm2() / r2;
    return amp * (exp_bump_sq(u, 2) * 4 * y.norm2() / (r2 * r2) + exp_bump_sq(u, 1) * 2 * d / r2);
  };
  f.support = Box{c - Vec(d, rho), c + Vec(d, rho)};
  f.descriptor = {{"kind", "smooth_bump"}, {"center", c.to_vector()}, {"radius", rho}, {"amplitude", amp}};
  return f;
}

ScalarField scaled_field(const ScalarField& f, double a) {
  ScalarField z = constant_field(f.d, 0.0, Cube{});
  return combine_fields(f, a, z, 0.0);
}

ScalarField combine_fields(const ScalarField& f, double a, const ScalarField& g, double b) {
  ScalarField h;
  h.d = f.d;
  h.value = [f, g, a, b](const Vec& x) { return a * f.value(x) + b * g.value(x); };
  if (f.gradient && g.gradient)
    h.gradient = [f, g, a, b](const Vec& x) { return f.gradient(x) * a + g.gradient(x) * b; };
  if (f.laplacian && g.laplacian)
    h.laplacian = [f, g, a, b](const Vec& x) { return a * f.laplacian(x) + b * g.laplacian(x); };
  const bool g_empty = b == 0 || (g.descriptor.value("kind", "") == "constant" && g.descriptor.value("value", 1.0) == 0);
  h.support = g_empty ? f.support : box_union(f.support, g.support);
  h.tag = f.tag;
  h.singular_points = f.singular_points;
  h.singular_points.insert(h.singular_points.end(), g.singular_points.begin(), g.singular_points.end());
  h.axis_breaks = f.axis_breaks;
  if (b != 0 && !g.axis_breaks.empty()) {
    h.axis_breaks.resize(f.d);
    for (int i = 0; i < f.d; ++i)
      h.axis_breaks[i].insert(h.axis_breaks[i].end(), g.axis_breaks[i].begin(), g.axis_breaks[i].end());
  }
  h.descriptor = {{"kind", "combination"}, {"a", a}, {"f", f.descriptor}, {"b", b}, {"g", g.descriptor}};
  return h;
}

// ---- Whitney extension --------------------------------------------------------

namespace {

struct WhitneyState {
  PorousCompact K;
  std::vector<double> values;
  KdTree tree;
  PlateauCutoff cutoff;
  double resolution = 0;
  int min_level = 0, max_level = 14;

  bool criterion(const DyadicIndex& w) const {
    const Cube c = w.cube();
    return K.dist(c.center()) - 0.5 * c.diam() >= 2 * c.diam();
  }

  bool member(const DyadicIndex& w) const {
    if (!criterion(w)) return false;
    if (w.level <= min_level) return true;
    DyadicIndex p = w;
    p.level -= 1;
    for (int i = 0; i < w.d; ++i) p.k[i] = static_cast<std::int64_t>(std::floor(w.k[i] / 2.0));
    return !criterion(p);
  }

  static double theta(const Cube& c, const Vec& x) {
    const double m = c.edge / 16;
    double p = 1;
    for (int i = 0; i < x.d && p > 0; ++i)
      p *= smooth_step((x[i] - (c.corner[i] - m)) / m) * smooth_step((c.corner[i] + c.edge + m - x[i]) / m);
    return p;
  }

  std::vector<WhitneyCubeRef> cubes_at(const Vec& x, double D) const {
    std::vector<WhitneyCubeRef> out;
    const int d = x.d;
    const double sd = std::sqrt(static_cast<double>(d));
    const int m_lo = std::max(min_level, static_cast<int>(std::floor(-std::log2(D / sd))));
    const int m_hi = std::min(max_level, static_cast<int>(std::ceil(-std::log2(D / (8 * sd)))));
    for (int m = m_lo; m <= m_hi; ++m) {
      const double e = std::ldexp(1.0, -m);
      std::array<long long, kMaxDim> lo{}, hi{};
      for (int i = 0; i < d; ++i) {
        const double s = x[i] / e;
        const long long k = static_cast<long long>(std::floor(s));
        lo[i] = hi[i] = k;
        if (s - k < 1.0 / 16) lo[i] = k - 1;
        if (s - k > 15.0 / 16) hi[i] = k + 1;
      }
      const int n = 1 << d;
      for (int msk = 0; msk < n; ++msk) {
        DyadicIndex w;
        w.level = m;
        w.d = d;
        bool ok = true;
        for (int i = 0; i < d; ++i) {
          const bool up = (msk >> i) & 1;
          if (up && hi[i] == lo[i]) { ok = false; break; }
          w.k[i] = up ? hi[i] : lo[i];
        }
        if (!ok || !member(w)) continue;
        const Cube c = w.cube();
        out.push_back({c, tree.points()[tree.nearest(c.center()).first]});
      }
    }
    return out;
  }

  double eval(const Vec& x) const {
    const double cut = cutoff.value(x);
    if (cut == 0) return 0.0;
    const double D = K.dist(x);
    if (D <= resolution) return cut * values[tree.nearest(x).first];
    double num = 0, den = 0;
    for (const auto& w : cubes_at(x, D)) {
      const double t = theta(w.cube, x);
      if (t == 0) continue;
      num += t * values[tree.nearest(w.anchor).first];
      den += t;
    }
    if (den == 0) return cut * values[tree.nearest(x).first];
    return cut * num / den;
  }
};

}  // namespace

WhitneyExtension whitney_extend(const std::vector<Vec>& samples, const std::vector<double>& values,
                                const PorousCompact& K, const WhitneyOptions& opt) {
  if (samples.empty() || samples.size() != values.size())
    throw InvalidArgument("Whitney extension needs samples with matching values");
  for (const auto& s : samples)
    if (K.dist(s) > K.eta + 1e-12) throw InvalidArgument("Whitney samples must lie on K (dist_oracle <= eta)");
  auto st = std::make_shared<WhitneyState>();
  st->K = K;
  st->values = values;
  st->tree = KdTree(samples);
  st->cutoff = standard_cutoff(K.bounding);
  st->max_level = opt.max_level;
  {
    int e = 0;
    std::frexp(K.bounding.edge, &e);
    st->min_level = 1 - e + 1;  // children of R_0
  }
  double rho = opt.resolution;
  if (rho <= 0) {
    // largest nearest-neighbour gap over a stride subsample
    const std::size_t stride = std::max<std::size_t>(1, samples.size() / 2000);
    for (std::size_t i = 0; i < samples.size(); i += stride) {
      const auto nn = st->tree.k_nearest(samples[i], 2);
      if (nn.size() == 2) rho = std::max(rho, dist(samples[i], samples[nn[1]]));
    }
  }
  st->resolution = rho;
  WhitneyExtension w;
  w.resolution = rho;
  w.state = st;
  w.field.d = K.d;
  w.field.value = [st](const Vec& x) { return st->eval(x); };
  w.field.support = st->cutoff.support();
  w.field.axis_breaks = st->cutoff.breaks();
  w.field.tag = Smoothness::Whitney;
  w.field.descriptor = {{"kind", "whitney"}, {"resolution", rho}};
  return w;
}

std::vector<WhitneyCubeRef> whitney_cubes_at(const WhitneyExtension& w, const Vec& x) {
  const auto* st = static_cast<const WhitneyState*>(w.state.get());
  const double D = st->K.dist(x);
  if (D <= 0) return {};
  return st->cubes_at(x, D);
}

// ---- mollification --------------------------------------------------------------

double mollifier_norm(int d) {
  // 1 / (sigma_{d-1} int_0^1 exp(-1/(1-r^2)) r^{d-1} dr), composite Gauss rule
  double s = 0;
  const int panels = 64;
  for (int p = 0; p < panels; ++p) {
    const Rule1D g = gauss_legendre(20, static_cast<double>(p) / panels, static_cast<double>(p + 1) / panels);
    for (std::size_t k = 0; k < g.x.size(); ++k) s += g.w[k] * exp_bump_sq(g.x[k] * g.x[k]) * std::pow(g.x[k], d - 1);
  }
  return 1.0 / (sphere_area(d) * s);
}

namespace {

struct MollifierRule {
  std::vector<Vec> z;
  std::vector<double> w0, lap;
  std::vector<Vec> grad;
  double mass = 0;
};

MollifierRule mollifier_rule(int d, int n) {
  MollifierRule r;
  const Rule1D& g = gauss_legendre(n);
  const double cn = mollifier_norm(d);
  int total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  for (int m = 0; m < total; ++m) {
    Vec z(d);
    double w = 1;
    int q = m;
    for (int i = 0; i < d; ++i) {
      z[i] = g.x[q % n];
      w *= g.w[q % n];
      q /= n;
    }
    const double u = z.norm2();
    if (u >= 1) continue;
    const double e0 = exp_bump_sq(u), e1 = exp_bump_sq(u, 1), e2 = exp_bump_sq(u, 2);
    r.z.push_back(z);
    r.w0.push_back(w * cn * e0);
    r.grad.push_back(z * (w * cn * 2 * e1));
    r.lap.push_back(w * cn * (4 * u * e2 + 2 * d * e1));
    r.mass += w * cn * e0;
  }
  return r;
}

}  // namespace

double mollifier_discrete_mass(int d, int nodes) { return mollifier_rule(d, nodes).mass; }

ScalarField mollify(const ScalarField& f, double eps, const MollifyOptions& opt) {
  if (!(eps > 0 && eps < 0.25)) throw InvalidArgument("mollifier radius must lie in (0, 1/4)");
  auto rule = std::make_shared<MollifierRule>(mollifier_rule(f.d, opt.nodes));
  ScalarField g;
  g.d = f.d;
  // Weights are renormalized by the discrete mass so constants are reproduced exactly.
  g.value = [f, rule, eps](const Vec& x) {
    double s = 0;
    for (std::size_t k = 0; k < rule->z.size(); ++k) s += rule->w0[k] * f.value(x - rule->z[k] * eps);
    return s / rule->mass;
  };
  g.gradient = [f, rule, eps](const Vec& x) {
    Vec s(f.d);
    const double f0 = f.value(x);
    for (std::size_t k = 0; k < rule->z.size(); ++k) s += rule->grad[k] * (f.value(x - rule->z[k] * eps) - f0);
    return s * (1.0 / (eps * rule->mass));
  };
  g.laplacian = [f, rule, eps](const Vec& x) {
    double s = 0;
    const double f0 = f.value(x);
    for (std::size_t k = 0; k < rule->z.size(); ++k) s += rule->lap[k] * (f.value(x - rule->z[k] * eps) - f0);
    return s / (eps * eps * rule->mass);
  };
  g.support = f.support;
  for (int i = 0; i < f.d; ++i) {
    g.support.lo[i] -= eps;
    g.support.hi[i] += eps;
  }
  g.tag = Smoothness::Mollified;
  g.descriptor = {{"kind", "mollified"}, {"epsilon", eps}, {"nodes", opt.nodes}, {"base", f.descriptor}};
  return g;
}

GradientAuditRow gradient_bound_audit(const ScalarField& f, const PorousCompact& K, const ContinuityModulus& w,
                                      int k, const std::vector<Vec>& grid) {
  if (k != 1 && k != 2) throw InvalidArgument("gradient audit supports k = 1 or 2");
  GradientAuditRow row;
  for (const auto& x : grid) {
    const double D = K.dist(x);
    if (D < 10 * K.eta || D <= 0) {
      ++row.skipped;
      continue;
    }
    const double h = D / 50;
    double mag = 0;
    if (k == 1) {
      mag = f.grad_or_fd(x, h).norm();
    } else {
      double s = 0;
      for (int i = 0; i < f.d; ++i) {
        Vec a = x, b = x;
        a[i] += h;
        b[i] -= h;
        const Vec col = (f.grad_or_fd(a, h) - f.grad_or_fd(b, h)) * (1.0 / (2 * h));
        s += col.norm2();
      }
      mag = std::sqrt(s);
    }
    const double ratio = mag * std::pow(D, k) / w(D);
    ++row.used;
    if (ratio > row.max_ratio) {
      row.max_ratio = ratio;
      row.argmax = x;
    }
  }
  return row;
}

namespace {

void read_valued_samples(const std::string& path, int d, std::vector<Vec>& pts, std::vector<double>& vals) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open field sample file: " + path);
  std::string line;
  std::getline(in, line);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> xs;
    while (std::getline(ss, tok, ',')) xs.push_back(std::stod(tok));
    if (static_cast<int>(xs.size()) != d + 1)
      throw InvalidArgument("field sample row " + std::to_string(row) + " needs d+1 columns in " + path);
    vals.push_back(xs.back());
    xs.pop_back();
    pts.push_back(Vec::from(xs));
  }
}

}  // namespace

ScalarField field_from_json(const nlohmann::json& j, const PorousCompact& K, const std::string& base_dir) {
  const std::string kind = j.at("kind").get<std::string>();
  const int d = K.d;
  ScalarField f;
  if (kind == "radial_power") {
    Vec x0 = j.contains("x0") ? Vec::from(j.at("x0").get<std::vector<double>>()) : K.samples.front();
    f = radial_power_field(j.value("s", 0.5), x0, K.bounding);
  } else if (kind == "constant") {
    f = constant_field(d, j.value("value", 1.0), K.bounding);
  } else if (kind == "linear") {
    f = linear_field(Vec::from(j.at("a").get<std::vector<double>>()), j.value("b", 0.0), K.bounding);
  } else if (kind == "smooth_bump") {
    f = smooth_bump_field(Vec::from(j.at("center").get<std::vector<double>>()), j.value("radius", 0.5),
                          j.value("amplitude", 1.0));
  } else if (kind == "whitney") {
    std::filesystem::path p = j.at("samples").get<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::vector<Vec> pts;
    std::vector<double> vals;
    read_valued_samples(p.string(), d, pts, vals);
    f = whitney_extend(pts, vals, K).field;
    if (j.contains("epsilon")) f = mollify(f, j.at("epsilon").get<double>());
  } else {
    throw InvalidArgument("unknown field kind: " + kind);
  }
  if (j.contains("scale")) f = scaled_field(f, j.at("scale").get<double>());
  return f;
}

}  // namespace ha
