#include "harmapprox/partition.hpp"

#include <algorithm>
#include <vector>


namespace ha {

double exp_bump(double x, int k) {
  if (!(std::abs(x) < 1)) return 0.0;
  const double a = 1 - x * x;
  const double e = std::exp(-1 / a);
  // q = -1/(1-x^2); e' = q' e, e'' = (q'' + q'^2) e, e''' = (q''' + 3q'q'' + q'^3) e
  const double q1 = -2 * x / (a * a);
  if (k == 0) return e;
  if (k == 1) return q1 * e;
  const double q2 = -(2 + 6 * x * x) / (a * a * a);
  if (k == 2) return (q2 + q1 * q1) * e;
  const double q3 = -24 * x * (1 + x * x) / (a * a * a * a);
  if (k == 3) return (q3 + 3 * q1 * q2 + q1 * q1 * q1) * e;
  throw InvalidArgument("exp_bump derivative order must be <= 3");
}

double exp_bump_sq(double u, int k) {
  if (!(u < 1)) return 0.0;
  const double b = 1 - u;
  const double e = std::exp(-1 / b);
  if (k == 0) return e;
  if (k == 1) return -e / (b * b);
  if (k == 2) return e * (1 / (b * b * b * b) - 2 / (b * b * b));
  throw InvalidArgument("exp_bump_sq derivative order must be <= 2");
}

namespace {

// Normalized polynomial bump psi_r(x) = (1-(x/r)^2)^m / (r N) on [-r, r]
// and its primitive H, both exact polynomials in u = x/r.
struct PrimitiveTable {
  static constexpr int m = 6;
  double r = 0;
  std::vector<double> p;  // coefficients of (1-u^2)^m / N in powers of u
  std::vector<double> P;  // primitive from -1

  explicit PrimitiveTable(double r_) : r(r_) {
    p.assign(2 * m + 1, 0.0);
    double binom = 1;
    for (int k = 0; k <= m; ++k) {
      p[2 * k] = (k % 2 ? -binom : binom);
      binom = binom * (m - k) / (k + 1);
    }
    P.assign(2 * m + 2, 0.0);
    for (int i = 0; i <= 2 * m; ++i) P[i + 1] = p[i] / (i + 1);
    double at_plus = 0, at_minus = 0;
    for (int i = 0; i <= 2 * m + 1; ++i) {
      at_plus += P[i];
      at_minus += (i % 2 ? -P[i] : P[i]);
    }
    P[0] = -at_minus;
    const double norm = at_plus - at_minus;
    for (double& c : p) c /= norm;
    for (double& c : P) c /= norm;
  }

  static double horner(const std::vector<double>& c, double u) {
    double s = 0;
    for (std::size_t i = c.size(); i-- > 0;) s = s * u + c[i];
    return s;
  }

  // k-th derivative of psi_r at x
  double psi(double x, int k) const {
    const double u = x / r;
    if (!(std::abs(u) < 1)) return 0.0;
    double s = 0;
    for (std::size_t i = p.size(); i-- > static_cast<std::size_t>(k);) {
      double f = 1;
      for (int j = 0; j < k; ++j) f *= static_cast<double>(i - j);
      s = s * u + f * p[i];
    }
    return s / std::pow(r, k + 1);
  }

  double prim(double x) const {
    if (x <= -r) return 0.0;
    if (x >= r) return 1.0;
    return horner(P, x / r);
  }
};

const PrimitiveTable& table_for(int d) {
  static const std::vector<PrimitiveTable> tabs = [] {
    std::vector<PrimitiveTable> v;
    for (int dd = 1; dd <= kMaxDim; ++dd) v.emplace_back(0.49 / std::sqrt(static_cast<double>(dd)));
    return v;
  }();
  return tabs[d - 1];
}

}  // namespace

void active_cells_1d(double x, double ell, double r, long long& k0, long long& k1) {
  const double s = x / ell;
  const long long k = static_cast<long long>(std::floor(s));
  const double f = s - k;
  k0 = k1 = k;
  if (f < r) k0 = k - 1;
  else if (f > 1 - r) k1 = k + 1;
}

BumpPartition::BumpPartition(int d, int level) : d_(d), level_(level) {
  if (d < 1 || d > kMaxDim) throw InvalidArgument("partition dimension out of range");
  if (level < 0) throw InvalidArgument("partition level must be nonnegative");
  ell_ = std::ldexp(1.0, -level);
  r_ = table_for(d).r;
}

double BumpPartition::psi(double s, int k) const {
  const PrimitiveTable& t = table_for(d_);
  if (k == 0) return t.prim(s) - t.prim(s - 1);
  return t.psi(s, k - 1) - t.psi(s - 1, k - 1);
}

void BumpPartition::psi012(double s, double& v, double& d1, double& d2) const {
  const PrimitiveTable& t = table_for(d_);
  v = t.prim(s) - t.prim(s - 1);
  d1 = t.psi(s, 0) - t.psi(s - 1, 0);
  d2 = t.psi(s, 1) - t.psi(s - 1, 1);
}

double BumpPartition::phi(const DyadicIndex& q, const Vec& x) const {
  double p = 1;
  for (int i = 0; i < d_ && p != 0; ++i) p *= psi(x[i] / ell_ - static_cast<double>(q.k[i]));
  return p;
}

Vec BumpPartition::grad_phi(const DyadicIndex& q, const Vec& x) const {
  std::array<double, kMaxDim> v{}, g{}, h{};
  for (int i = 0; i < d_; ++i) psi012(x[i] / ell_ - static_cast<double>(q.k[i]), v[i], g[i], h[i]);
  Vec out(d_);
  for (int i = 0; i < d_; ++i) {
    double p = g[i] / ell_;
    for (int k = 0; k < d_; ++k)
      if (k != i) p *= v[k];
    out[i] = p;
  }
  return out;
}

double BumpPartition::lap_phi(const DyadicIndex& q, const Vec& x) const {
  std::array<double, kMaxDim> v{}, g{}, h{};
  for (int i = 0; i < d_; ++i) psi012(x[i] / ell_ - static_cast<double>(q.k[i]), v[i], g[i], h[i]);
  double s = 0;
  for (int i = 0; i < d_; ++i) {
    double p = h[i] / (ell_ * ell_);
    for (int k = 0; k < d_; ++k)
      if (k != i) p *= v[k];
    s += p;
  }
  return s;
}

double BumpPartition::phi_all(const DyadicIndex& q, const Vec& x, Vec& grad, double& lap) const {
  std::array<double, kMaxDim> v{}, g{}, h{};
  grad = Vec(d_);
  lap = 0;
  for (int i = 0; i < d_; ++i) {
    psi012(x[i] / ell_ - static_cast<double>(q.k[i]), v[i], g[i], h[i]);
    if (v[i] == 0 && g[i] == 0 && h[i] == 0) return 0.0;
  }
  // prefix/suffix products avoid division by vanishing factors
  std::array<double, kMaxDim + 1> pre{}, suf{};
  pre[0] = 1;
  for (int i = 0; i < d_; ++i) pre[i + 1] = pre[i] * v[i];
  suf[d_] = 1;
  for (int i = d_ - 1; i >= 0; --i) suf[i] = suf[i + 1] * v[i];
  for (int i = 0; i < d_; ++i) {
    const double rest = pre[i] * suf[i + 1];
    grad[i] = g[i] / ell_ * rest;
    lap += h[i] / (ell_ * ell_) * rest;
  }
  return pre[d_];
}

Box BumpPartition::support(const DyadicIndex& q) const {
  Box b{Vec(d_), Vec(d_)};
  for (int i = 0; i < d_; ++i) {
    b.lo[i] = (static_cast<double>(q.k[i]) - r_) * ell_;
    b.hi[i] = (static_cast<double>(q.k[i]) + 1 + r_) * ell_;
  }
  return b;
}

std::vector<DyadicIndex> BumpPartition::active_cubes(const Vec& x) const {
  std::array<long long, kMaxDim> lo{}, hi{};
  for (int i = 0; i < d_; ++i) active_cells_1d(x[i], ell_, r_, lo[i], hi[i]);
  std::vector<DyadicIndex> out;
  const int n = 1 << d_;
  for (int m = 0; m < n; ++m) {
    DyadicIndex q;
    q.level = level_;
    q.d = d_;
    bool ok = true;
    for (int i = 0; i < d_; ++i) {
      const bool up = (m >> i) & 1;
      if (up && hi[i] == lo[i]) { ok = false; break; }
      q.k[i] = up ? hi[i] : lo[i];
    }
    if (ok) out.push_back(q);
  }
  return out;
}

double BumpPartition::sum_at(const Vec& x) const {
  double s = 0;
  for (const auto& q : active_cubes(x)) s += phi(q, x);
  return s;
}

std::vector<double> BumpPartition::derivative_bounds() const {
  // sup |Psi^{(m)}| on a fine grid, then products over the axes.
  std::array<double, 5> sup{};
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double s = -r_ + (1 + 2 * r_) * i / n;
    for (int m = 0; m <= 4; ++m) sup[m] = std::max(sup[m], std::abs(psi(s, m)));
  }
  std::vector<double> C(5, 0.0);
  // maximize prod_i sup[beta_i] over |beta| = k; sup[0] = 1
  MultiIndexSet set(d_, 4);
  for (std::size_t a = 0; a < set.size(); ++a) {
    double p = 1;
    for (int i = 0; i < d_; ++i) p *= sup[set[a][i]];
    C[set.order(a)] = std::max(C[set.order(a)], p);
  }
  return C;
}

}  // namespace ha
