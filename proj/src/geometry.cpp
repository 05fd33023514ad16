#include "harmapprox/geometry.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>


namespace ha {

// ---- cubes -----------------------------------------------------------------

Vec Cube::center() const {
  Vec c = corner;
  for (int i = 0; i < c.d; ++i) c[i] += 0.5 * edge;
  return c;
}

Box Cube::box() const {
  Box b{corner, corner};
  for (int i = 0; i < corner.d; ++i) b.hi[i] += edge;
  return b;
}

bool Cube::contains(const Vec& x) const {
  for (int i = 0; i < corner.d; ++i)
    if (x[i] < corner[i] || x[i] >= corner[i] + edge) return false;
  return true;
}

Cube Cube::dilate(double s) const {
  Cube c;
  c.edge = s * edge;
  c.corner = corner;
  for (int i = 0; i < corner.d; ++i) c.corner[i] -= 0.5 * (s - 1.0) * edge;
  return c;
}

bool Cube::closed_intersects(const Cube& o) const {
  for (int i = 0; i < corner.d; ++i)
    if (corner[i] > o.corner[i] + o.edge || o.corner[i] > corner[i] + edge) return false;
  return true;
}

Cube DyadicIndex::cube() const {
  Cube c;
  c.edge = edge();
  c.corner = Vec(d);
  for (int i = 0; i < d; ++i) c.corner[i] = static_cast<double>(k[i]) * c.edge;
  return c;
}

bool DyadicIndex::operator==(const DyadicIndex& o) const {
  if (level != o.level || d != o.d) return false;
  for (int i = 0; i < d; ++i)
    if (k[i] != o.k[i]) return false;
  return true;
}

bool DyadicIndex::operator<(const DyadicIndex& o) const {
  if (level != o.level) return level < o.level;
  for (int i = 0; i < d; ++i)
    if (k[i] != o.k[i]) return k[i] < o.k[i];
  return false;
}

std::size_t DyadicHash::operator()(const DyadicIndex& q) const {
  std::uint64_t h = 1469598103934665603ULL ^ static_cast<std::uint64_t>(q.level);
  for (int i = 0; i < q.d; ++i) {
    h ^= static_cast<std::uint64_t>(q.k[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

DyadicIndex dyadic_index_of(const Vec& x, int level) {
  DyadicIndex q;
  q.level = level;
  q.d = x.d;
  const double s = std::ldexp(1.0, level);
  for (int i = 0; i < x.d; ++i) q.k[i] = static_cast<std::int64_t>(std::floor(x[i] * s));
  return q;
}

namespace {

// Level of a dyadic-compatible cube, or throws.
int dyadic_level(const Cube& R) {
  int e = 0;
  const double m = std::frexp(R.edge, &e);
  if (R.edge <= 0 || m != 0.5) throw InvalidArgument("cube edge is not a power of two");
  const int level = 1 - e;  // edge = 2^{-level}
  for (int i = 0; i < R.dim(); ++i) {
    const double q = R.corner[i] / R.edge;
    if (q != std::floor(q)) throw InvalidArgument("cube corner is not on the dyadic lattice of its edge");
  }
  return level;
}

DyadicIndex index_of_cube(const Cube& R) {
  DyadicIndex q;
  q.level = dyadic_level(R);
  q.d = R.dim();
  for (int i = 0; i < q.d; ++i) q.k[i] = static_cast<std::int64_t>(std::llround(R.corner[i] / R.edge));
  return q;
}

// Fallback "box meets K" from the distance oracle alone: subdivide until the
// half-diagonal drops below the oracle accuracy.
bool meets_by_distance(const PorousCompact& K, const Box& b, int depth) {
  Vec c = b.lo;
  double h2 = 0;
  for (int i = 0; i < K.d; ++i) {
    c[i] = 0.5 * (b.lo[i] + b.hi[i]);
    h2 += 0.25 * (b.hi[i] - b.lo[i]) * (b.hi[i] - b.lo[i]);
  }
  const double h = std::sqrt(h2);
  const double dc = K.dist(c);
  if (dc > h + 2 * K.eta) return false;
  if (dc <= 2 * K.eta || h <= std::max(K.eta, 1e-12) || depth > 30) return true;
  const int n = 1 << K.d;
  for (int m = 0; m < n; ++m) {
    Box s = b;
    for (int i = 0; i < K.d; ++i) {
      if (m & (1 << i)) s.lo[i] = c[i];
      else s.hi[i] = c[i];
    }
    if (meets_by_distance(K, s, depth + 1)) return true;
  }
  return false;
}

void descend(const PorousCompact& K, const DyadicIndex& q, int target, std::vector<DyadicIndex>& out) {
  if (!K.box_meets(q.cube().box())) return;
  if (q.level == target) {
    out.push_back(q);
    return;
  }
  const int n = 1 << K.d;
  for (int m = 0; m < n; ++m) {
    DyadicIndex c = q;
    c.level = q.level + 1;
    for (int i = 0; i < K.d; ++i) c.k[i] = 2 * q.k[i] + ((m >> i) & 1);
    descend(K, c, target, out);
  }
}

}  // namespace

bool PorousCompact::box_meets(const Box& b) const {
  if (meets) return meets(b);
  return meets_by_distance(*this, b, 0);
}

std::vector<Cube> dyadic_cubes(int j, const Cube& R) {
  if (j < 0) throw InvalidArgument("level must be nonnegative");
  const DyadicIndex root = index_of_cube(R);
  const int d = R.dim();
  const std::int64_t n = std::int64_t{1} << j;
  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  std::vector<Cube> out;
  out.reserve(static_cast<std::size_t>(total));
  for (std::int64_t m = 0; m < total; ++m) {
    DyadicIndex q;
    q.level = root.level + j;
    q.d = d;
    std::int64_t r = m;
    for (int i = d - 1; i >= 0; --i) {
      q.k[i] = root.k[i] * n + r % n;
      r /= n;
    }
    out.push_back(q.cube());
  }
  return out;
}

NearCubes cubes_meeting_K(int j, const PorousCompact& K) {
  const double ell = std::ldexp(1.0, -j);
  if (!(ell < K.bounding.edge / 4)) throw InvalidArgument("level too coarse: need 2^-j < edge(R_0)/4");
  if (K.eta >= ell / 2) throw InvalidArgument("distance oracle too coarse for this level (eta >= 2^-j/2)");
  const DyadicIndex root = index_of_cube(K.bounding);
  NearCubes nc;
  nc.level = j;
  descend(K, root, j, nc.D);
  std::sort(nc.D.begin(), nc.D.end());
  DyadicSet all(nc.D.begin(), nc.D.end());
  int n3 = 1;
  for (int i = 0; i < K.d; ++i) n3 *= 3;
  for (const auto& q : nc.D) {
    for (int m = 0; m < n3; ++m) {
      DyadicIndex nb = q;
      int r = m;
      for (int i = 0; i < K.d; ++i) {
        nb.k[i] += (r % 3) - 1;
        r /= 3;
      }
      all.insert(nb);
    }
  }
  nc.Dprime.assign(all.begin(), all.end());
  std::sort(nc.Dprime.begin(), nc.Dprime.end());
  return nc;
}

double search_porosity(const PorousCompact& K) { return K.porosity / 3.0; }

PorosityBall find_porosity_ball(const Cube& Q, const PorousCompact& K) {
  const int d = Q.dim();
  const double ell = Q.edge;
  const double cap = ell / 6.0;
  auto radius_at = [&](const Vec& x, double& dk) {
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) bd = std::min({bd, x[i] - Q.corner[i], Q.corner[i] + ell - x[i]});
    dk = K.dist(x);
    return std::min({cap, bd, (dk - 2 * K.eta) / 3.0});
  };
  PorosityBall best;
  double dk = 0;
  best.center = Q.center();
  best.radius = radius_at(best.center, dk);
  best.dist_to_K = dk;
  if (best.radius < cap) {
    // Deterministic sweep over cell midpoints of a g^d grid.
    const int g = d <= 3 ? 9 : (d == 4 ? 7 : 5);
    int total = 1;
    for (int i = 0; i < d; ++i) total *= g;
    for (int m = 0; m < total; ++m) {
      Vec x = Q.corner;
      int r = m;
      for (int i = 0; i < d; ++i) {
        x[i] += (r % g + 0.5) / g * ell;
        r /= g;
      }
      const double rad = radius_at(x, dk);
      if (rad > best.radius || (rad == best.radius && dk > best.dist_to_K)) {
        best.center = x;
        best.radius = rad;
        best.dist_to_K = dk;
        if (rad >= cap) break;
      }
    }
  }
  const double target = search_porosity(K) * ell;
  if (!(best.radius >= target)) {
    std::ostringstream os;
    os << "no porosity ball of radius >= " << target << " in cube with corner (";
    for (int i = 0; i < d; ++i) os << (i ? "," : "") << Q.corner[i];
    os << ") edge " << ell << "; best radius " << best.radius;
    throw BallSearchFailure(os.str(), Q, best.center, best.radius);
  }
  return best;
}

bool verify_porosity_ball(const PorosityBall& b, const Cube& Q, const PorousCompact& K) {
  const int d = Q.dim();
  for (int i = 0; i < d; ++i) {
    if (b.center[i] - b.radius < Q.corner[i] - 1e-15) return false;
    if (b.center[i] + b.radius > Q.corner[i] + Q.edge + 1e-15) return false;
  }
  if (b.radius < search_porosity(K) * Q.edge * (1 - 1e-12)) return false;
  return K.dist(b.center) - 2 * K.eta >= 3 * b.radius * (1 - 1e-12);
}

namespace {

long long count_blocks(const PorousCompact& K, const Cube& R, double ell, std::array<long long, kMaxDim> lo,
                       std::array<long long, kMaxDim> hi) {
  const int d = K.d;
  Box b{Vec(d), Vec(d)};
  long long cells = 1;
  int widest = 0;
  for (int i = 0; i < d; ++i) {
    b.lo[i] = R.corner[i] + lo[i] * ell;
    b.hi[i] = std::min(R.corner[i] + hi[i] * ell, R.corner[i] + R.edge);
    cells *= hi[i] - lo[i];
    if (hi[i] - lo[i] > hi[widest] - lo[widest]) widest = i;
  }
  if (!K.box_meets(b)) return 0;
  if (cells == 1) return 1;
  const long long mid = (lo[widest] + hi[widest]) / 2;
  auto hi1 = hi, lo2 = lo;
  hi1[widest] = mid;
  lo2[widest] = mid;
  return count_blocks(K, R, ell, lo, hi1) + count_blocks(K, R, ell, lo2, hi);
}

}  // namespace

long long covering_count(const Cube& R, double ell, const PorousCompact& K) {
  if (!(ell > 0) || !(ell < R.edge / 4)) throw InvalidArgument("covering scale must satisfy 0 < ell < edge(R)/4");
  std::array<long long, kMaxDim> lo{}, hi{};
  const long long n = static_cast<long long>(std::ceil(R.edge / ell - 1e-9));
  for (int i = 0; i < K.d; ++i) hi[i] = n;
  return count_blocks(K, R, ell, lo, hi);
}

CoveringEstimate estimate_covering_exponent(const PorousCompact& K, const std::vector<double>& ells) {
  if (ells.size() < 3) throw InvalidArgument("covering exponent needs at least three scales");
  CoveringEstimate est;
  std::vector<double> xs, ys;
  for (double ell : ells) {
    const long long n = covering_count(K.bounding, ell, K);
    est.counts.emplace_back(ell, n);
    if (n > 0) {
      xs.push_back(std::log(K.bounding.edge / ell));
      ys.push_back(std::log(static_cast<double>(n)));
    }
  }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
    mx /= xs.size();
    my /= xs.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    est.exponent = sxx > 0 ? std::max(0.0, sxy / sxx) : 0.0;
  }
  for (auto [ell, n] : est.counts)
    est.constant = std::max(est.constant, n / std::pow(K.bounding.edge / ell, est.exponent));
  return est;
}

// ---- Cantor dust -----------------------------------------------------------

namespace {

struct Cantor1D {
  double lo = 0.5, len = 1.0, ratio = 1.0 / 3.0;
  int depth = 1;

  double dist(double x) const {
    double a = lo, b = lo + len;
    for (int k = 0; k < depth; ++k) {
      const double w = (b - a) * ratio;
      if (x <= 0.5 * (a + b)) b = a + w;
      else a = b - w;
    }
    return std::max({a - x, 0.0, x - b});
  }

  // [l, h) meets the depth-truncated set
  bool meets(double l, double h) const { return meets_rec(lo, lo + len, depth, l, h); }
  bool meets_rec(double a, double b, int k, double l, double h) const {
    if (b < l || a >= h) return false;
    if (k == 0) return true;
    const double w = (b - a) * ratio;
    return meets_rec(a, a + w, k - 1, l, h) || meets_rec(b - w, b, k - 1, l, h);
  }

  std::vector<double> left_ends(int k) const {
    std::vector<double> e{lo};
    double w = len;
    for (int s = 0; s < k; ++s) {
      const double nw = w * ratio;
      std::vector<double> ne;
      ne.reserve(2 * e.size());
      for (double a : e) {
        ne.push_back(a);
        ne.push_back(a + w - nw);
      }
      e.swap(ne);
      w = nw;
    }
    return e;
  }
};

}  // namespace

PorousCompact generate_cantor_dust(int d, int depth, double ratio, int sample_depth) {
  if (d < 2 || d > kMaxDim) throw InvalidArgument("Cantor dust dimension out of range");
  if (depth < 1) throw InvalidArgument("Cantor depth must be >= 1");
  if (!(ratio > 0 && ratio < 0.5)) throw InvalidArgument("Cantor ratio must lie in (0, 1/2)");
  if (sample_depth < 0) sample_depth = std::min(depth, 5);
  sample_depth = std::min(sample_depth, depth);
  auto c1 = std::make_shared<Cantor1D>();
  c1->ratio = ratio;
  c1->depth = depth;

  PorousCompact K;
  K.d = d;
  K.bounding.corner = Vec(d, 0.0);
  K.bounding.edge = 2.0;
  K.eta = std::sqrt(static_cast<double>(d)) * std::pow(ratio, depth);
  K.porosity = 0.45 * (1 - 2 * ratio);
  K.dist_oracle = [c1, d](const Vec& x) {
    double s = 0;
    for (int i = 0; i < d; ++i) {
      const double e = c1->dist(x[i]);
      s += e * e;
    }
    return std::sqrt(s);
  };
  K.meets = [c1, d](const Box& b) {
    for (int i = 0; i < d; ++i)
      if (!c1->meets(b.lo[i], b.hi[i])) return false;
    return true;
  };
  const std::vector<double> ends = c1->left_ends(sample_depth);
  const std::size_t m = ends.size();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= m;
  K.samples.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec x(d);
    std::size_t r = idx;
    for (int i = d - 1; i >= 0; --i) {
      x[i] = ends[r % m];
      r /= m;
    }
    K.samples.push_back(x);
  }
  K.descriptor = {{"kind", "cantor"},     {"d", d},
                  {"depth", depth},       {"ratio", ratio},
                  {"sample_depth", sample_depth}, {"R0", cube_to_json(K.bounding)},
                  {"c", K.porosity},      {"eta", K.eta}};
  return K;
}

// ---- point clouds ------------------------------------------------------------

bool check_margin(const PorousCompact& K) {
  const double need = K.bounding.edge / 4;
  for (const auto& x : K.samples)
    for (int i = 0; i < K.d; ++i) {
      const double m = std::min(x[i] - K.bounding.corner[i], K.bounding.corner[i] + K.bounding.edge - x[i]);
      if (m < need * (1 - 1e-12)) return false;
    }
  return true;
}

PorousCompact import_point_cloud(const std::vector<Vec>& points, const Cube& R0, double c_hint,
                                 std::uint64_t seed) {
  if (points.empty()) throw InvalidArgument("point cloud is empty");
  if (!(c_hint > 0 && c_hint < 1)) throw InvalidArgument("porosity hint must lie in (0,1)");
  const int d = R0.dim();
  for (const auto& p : points)
    if (p.d != d) throw InvalidArgument("point dimension does not match R_0");
  auto tree = std::make_shared<KdTree>(points);
  PorousCompact K;
  K.d = d;
  K.bounding = R0;
  K.porosity = c_hint;
  K.eta = 0;
  K.samples = points;
  K.dist_oracle = [tree](const Vec& x) { return tree->nearest(x).second; };
  K.meets = [tree](const Box& b) { return tree->any_in_box(b.lo, b.hi); };
  K.descriptor = {{"kind", "point_cloud"}, {"d", d}, {"R0", cube_to_json(R0)}, {"c", c_hint}, {"eta", 0.0},
                  {"count", points.size()}};
  if (!check_margin(K)) throw InvalidArgument("point cloud violates the margin dist(K, boundary of R_0) >= edge/4");
  const PorosityAudit a = audit_porosity(K, seed);
  if (!a.passed) {
    std::ostringstream os;
    os << "porosity validation failed at c = " << c_hint << ": worst sub-ball fraction " << a.worst_fraction;
    throw InvalidArgument(os.str());
  }
  return K;
}

Halton::Halton(int dim, std::uint64_t seed) : d_(dim) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < d_; ++i) shift_[i] = u(rng);
}

Vec Halton::next() {
  static constexpr int primes[kMaxDim] = {2, 3, 5, 7, 11, 13};
  Vec x(d_);
  for (int i = 0; i < d_; ++i) {
    double f = 1, r = 0;
    std::uint64_t n = index_;
    while (n > 0) {
      f /= primes[i];
      r += f * static_cast<double>(n % primes[i]);
      n /= primes[i];
    }
    x[i] = std::fmod(r + shift_[i], 1.0);
  }
  ++index_;
  return x;
}

PorosityAudit audit_porosity(const PorousCompact& K, std::uint64_t seed, int balls_per_scale) {
  PorosityAudit rep;
  if (K.samples.empty()) return rep;
  const int d = K.d;
  const int g = d <= 3 ? 13 : (d == 4 ? 9 : 6);
  // Candidate sub-ball centres: grid points of [-1,1]^d inside the unit ball.
  std::vector<Vec> offs;
  {
    int total = 1;
    for (int i = 0; i < d; ++i) total *= g;
    for (int m = 0; m < total; ++m) {
      Vec u(d);
      int r = m;
      for (int i = 0; i < d; ++i) {
        u[i] = -1.0 + 2.0 * (r % g) / (g - 1);
        r /= g;
      }
      if (u.norm() < 1.0) offs.push_back(u);
    }
  }
  Halton h(1, seed);
  for (int s = 3; s <= 5; ++s) {
    const double R = K.bounding.edge * std::ldexp(1.0, -s);
    for (int b = 0; b < balls_per_scale; ++b) {
      const auto idx = std::min(K.samples.size() - 1,
                                static_cast<std::size_t>(h.next()[0] * static_cast<double>(K.samples.size())));
      const Vec& x = K.samples[idx];
      double best = 0;
      for (const auto& u : offs) {
        const Vec z = x + R * u;
        const double room = R * (1.0 - u.norm());
        best = std::max(best, std::min(room, K.dist(z) - 2 * K.eta));
        if (best >= K.porosity * R) break;
      }
      const double frac = best / R;
      ++rep.balls_tested;
      if (frac < rep.worst_fraction) {
        rep.worst_fraction = frac;
        rep.worst_center = x;
        rep.worst_radius = R;
      }
      if (frac < K.porosity) rep.passed = false;
    }
  }
  return rep;
}

std::vector<Vec> read_point_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open point cloud file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("point cloud file is empty: " + path);
  int d = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      ++d;
      auto t = tok;
      t.erase(0, t.find_first_not_of(" \t\r"));
      t.erase(t.find_last_not_of(" \t\r") + 1);
      if (t != "x" + std::to_string(d)) throw InvalidArgument("point cloud header must be x1,...,xd in " + path);
    }
  }
  if (d < 1 || d > kMaxDim) throw InvalidArgument("unsupported point cloud dimension in " + path);
  std::vector<Vec> pts;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string tok;
    Vec x(d);
    int i = 0;
    while (std::getline(ss, tok, ',')) {
      if (i >= d) throw InvalidArgument("too many columns at row " + std::to_string(row) + " of " + path);
      try {
        x[i++] = std::stod(tok);
      } catch (const std::exception&) {
        throw InvalidArgument("bad number at row " + std::to_string(row) + " of " + path);
      }
    }
    if (i != d) throw InvalidArgument("too few columns at row " + std::to_string(row) + " of " + path);
    pts.push_back(x);
  }
  return pts;
}

void write_point_cloud_csv(const std::string& path, const std::vector<Vec>& pts) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  const int d = pts.empty() ? 3 : pts.front().d;
  for (int i = 0; i < d; ++i) out << (i ? "," : "") << "x" << i + 1;
  out << "\n";
  out.precision(17);
  for (const auto& p : pts) {
    for (int i = 0; i < d; ++i) out << (i ? "," : "") << p[i];
    out << "\n";
  }
}

nlohmann::json cube_to_json(const Cube& c) {
  return {{"corner", c.corner.to_vector()}, {"edge", c.edge}};
}

Cube cube_from_json(const nlohmann::json& j) {
  Cube c;
  c.corner = Vec::from(j.at("corner").get<std::vector<double>>());
  c.edge = j.at("edge").get<double>();
  return c;
}

PorousCompact compact_from_json(const nlohmann::json& j, const std::string& base_dir) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cantor") {
    const int d = j.value("d", 3);
    const int depth = j.value("depth", 10);
    const double ratio = j.value("ratio", 1.0 / 3.0);
    const int sd = j.value("sample_depth", -1);
    PorousCompact K = generate_cantor_dust(d, depth, ratio, sd);
    if (j.contains("c")) {
      K.porosity = j.at("c").get<double>();
      K.descriptor["c"] = K.porosity;
    }
    return K;
  }
  if (kind == "point_cloud") {
    std::vector<Vec> pts;
    if (j.contains("points")) {
      for (const auto& p : j.at("points")) pts.push_back(Vec::from(p.get<std::vector<double>>()));
    } else {
      std::filesystem::path p = j.at("samples").get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      pts = read_point_cloud_csv(p.string());
    }
    Cube R0;
    if (j.contains("R0")) R0 = cube_from_json(j.at("R0"));
    else {
      const int d = pts.empty() ? 3 : pts.front().d;
      R0.corner = Vec(d, 0.0);
      R0.edge = 2.0;
    }
    PorousCompact K = import_point_cloud(pts, R0, j.value("c", 0.1), j.value("seed", 12345ULL));
    if (j.contains("samples")) K.descriptor["samples"] = j.at("samples");
    return K;
  }
  throw InvalidArgument("unknown compact kind: " + kind);
}

}  // namespace ha
