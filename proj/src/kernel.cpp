#include "harmapprox/kernel.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace ha {

namespace {

long long checked_mul(long long a, long long b) {
  long long r;
  if (__builtin_mul_overflow(a, b, &r)) throw NumericalFailure("kernel polynomial coefficient overflow");
  return r;
}

long long checked_add(long long a, long long b) {
  long long r;
  if (__builtin_add_overflow(a, b, &r)) throw NumericalFailure("kernel polynomial coefficient overflow");
  return r;
}

}  // namespace

IntPolynomial IntPolynomial::constant(int d, long long c) {
  IntPolynomial p(d);
  p.add_term(MultiIndex{}, c);
  return p;
}

int IntPolynomial::degree() const {
  int deg = -1;
  for (const auto& [e, c] : terms_) deg = std::max(deg, mi_order(e, d_));
  return deg;
}

bool IntPolynomial::homogeneous() const {
  const int deg = degree();
  for (const auto& [e, c] : terms_)
    if (mi_order(e, d_) != deg) return false;
  return true;
}

void IntPolynomial::add_term(const MultiIndex& e, long long c) {
  if (c == 0) return;
  auto it = terms_.find(e);
  if (it == terms_.end()) {
    terms_.emplace(e, c);
    return;
  }
  it->second = checked_add(it->second, c);
  if (it->second == 0) terms_.erase(it);
}

IntPolynomial IntPolynomial::derivative(int i) const {
  IntPolynomial r(d_);
  for (const auto& [e, c] : terms_) {
    if (e[i] == 0) continue;
    MultiIndex f = e;
    --f[i];
    r.add_term(f, checked_mul(c, e[i]));
  }
  return r;
}

IntPolynomial IntPolynomial::times_coord(int i) const {
  IntPolynomial r(d_);
  for (const auto& [e, c] : terms_) {
    MultiIndex f = e;
    ++f[i];
    r.add_term(f, c);
  }
  return r;
}

IntPolynomial IntPolynomial::times_norm2() const {
  IntPolynomial r(d_);
  for (int i = 0; i < d_; ++i)
    for (const auto& [e, c] : terms_) {
      MultiIndex f = e;
      f[i] += 2;
      r.add_term(f, c);
    }
  return r;
}

IntPolynomial IntPolynomial::scaled(long long s) const {
  IntPolynomial r(d_);
  for (const auto& [e, c] : terms_) r.add_term(e, checked_mul(c, s));
  return r;
}

IntPolynomial IntPolynomial::operator+(const IntPolynomial& o) const {
  IntPolynomial r = *this;
  for (const auto& [e, c] : o.terms_) r.add_term(e, c);
  return r;
}

IntPolynomial IntPolynomial::operator-(const IntPolynomial& o) const { return *this + o.scaled(-1); }

double IntPolynomial::eval(const Vec& t) const {
  double s = 0;
  for (const auto& [e, c] : terms_) {
    double m = static_cast<double>(c);
    for (int i = 0; i < d_; ++i)
      for (int k = 0; k < e[i]; ++k) m *= t[i];
    s += m;
  }
  return s;
}

namespace {

struct PolyKey {
  int d;
  MultiIndex a;
  bool operator==(const PolyKey& o) const { return d == o.d && a == o.a; }
};
struct PolyKeyHash {
  std::size_t operator()(const PolyKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.d);
    for (int x : k.a) h = h * 31 + static_cast<std::size_t>(x);
    return h;
  }
};

}  // namespace

const IntPolynomial& kernel_polynomial(const MultiIndex& alpha, int d) {
  static std::mutex mu;
  static std::unordered_map<PolyKey, IntPolynomial, PolyKeyHash> cache;
  if (d < 3 || d > kMaxDim) throw InvalidArgument("kernel polynomials need 3 <= d <= kMaxDim");
  std::lock_guard<std::mutex> lk(mu);
  PolyKey key{d, alpha};
  for (int i = d; i < kMaxDim; ++i) key.a[i] = 0;
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  // Walk from 0 to alpha one unit step at a time, caching every prefix.
  MultiIndex cur{};
  IntPolynomial p = IntPolynomial::constant(d, 1);
  cache.emplace(PolyKey{d, cur}, p);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < key.a[i]; ++k) {
      const long long m = 2LL * mi_order(cur, d) + d - 2;
      p = p.derivative(i).times_norm2() - p.times_coord(i).scaled(m);
      ++cur[i];
      cache.emplace(PolyKey{d, cur}, p);
    }
  return cache.at(key);
}

IntPolynomial kernel_laplacian_numerator(const MultiIndex& alpha, int d) {
  const IntPolynomial& P = kernel_polynomial(alpha, d);
  const long long m = 2LL * mi_order(alpha, d) + d - 2;
  IntPolynomial lap(d), tgrad(d);
  for (int i = 0; i < d; ++i) {
    lap = lap + P.derivative(i).derivative(i);
    tgrad = tgrad + P.derivative(i).times_coord(i);
  }
  return lap.times_norm2() - tgrad.scaled(2 * m) - P.scaled(m * (d - m - 2));
}

double kernel_derivative(const MultiIndex& alpha, const Vec& t) {
  const int d = t.d;
  const int n = mi_order(alpha, d);
  if (n > 12) throw InvalidArgument("kernel_derivative supports |alpha| <= 12");
  const double r2 = t.norm2();
  if (!(r2 > 1e-200)) throw InvalidArgument("kernel_derivative: |t| below underflow guard");
  const double r = std::sqrt(r2);
  return kernel_polynomial(alpha, d).eval(t) / std::pow(r, 2 * n + d - 2);
}

KernelTable::KernelTable(int d, int P) : set_(d, P) {
  if (d < 3) throw InvalidArgument("kernel table needs d >= 3");
  term_start_.assign(set_.size() + 1, 0);
  for (std::size_t a = 1; a < set_.size(); ++a) {
    term_start_[a] = terms_.size();
    const MultiIndex& al = set_[a];
    int i = 0;
    while (al[i] == 0) ++i;
    MultiIndex beta = al;
    --beta[i];
    const int b = set_.index(beta);
    // u D_alpha = -[(d-2)(x_i D_beta + beta_i D_{beta-e_i})
    //               + sum_k 2 beta_k x_k D_{beta-e_k+e_i}
    //               + sum_k beta_k(beta_k-1) D_{beta-2e_k+e_i}]
    terms_.push_back({b, static_cast<double>(d - 2), i});
    if (beta[i] >= 1) {
      MultiIndex g = beta;
      --g[i];
      terms_.push_back({set_.index(g), static_cast<double>((d - 2) * beta[i]), -1});
    }
    for (int k = 0; k < d; ++k) {
      if (beta[k] >= 1) {
        MultiIndex g = beta;
        --g[k];
        ++g[i];
        terms_.push_back({set_.index(g), 2.0 * beta[k], k});
      }
      if (beta[k] >= 2) {
        MultiIndex g = beta;
        g[k] -= 2;
        ++g[i];
        terms_.push_back({set_.index(g), static_cast<double>(beta[k] * (beta[k] - 1)), -1});
      }
    }
  }
  term_start_[set_.size()] = terms_.size();
}

void KernelTable::eval(const Vec& x, int p, double* out) const {
  const int d = set_.dim();
  const double u = x.norm2();
  const double inv_u = 1.0 / u;
  out[0] = d == 3 ? 1.0 / std::sqrt(u) : std::pow(u, -0.5 * (d - 2));
  const std::size_t n = set_.count_upto(p);
  for (std::size_t a = 1; a < n; ++a) {
    double s = 0;
    for (std::size_t k = term_start_[a]; k < term_start_[a + 1]; ++k) {
      const Term& t = terms_[k];
      s += t.var < 0 ? t.coef * out[t.src] : t.coef * x[t.var] * out[t.src];
    }
    out[a] = -s * inv_u;
  }
}

const KernelTable& kernel_table(int d, int P) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<KernelTable>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = cache[{d, P}];
  if (!slot) slot = std::make_unique<KernelTable>(d, P);
  return *slot;
}

std::vector<KernelBoundRow> kernel_bound_audit(int alpha_max, const std::vector<Vec>& samples) {
  if (samples.empty()) throw InvalidArgument("kernel bound audit needs samples");
  const int d = samples.front().d;
  const KernelTable& tab = kernel_table(d, alpha_max);
  const MultiIndexSet& set = tab.indices();
  std::vector<KernelBoundRow> rows(alpha_max);
  for (int n = 1; n <= alpha_max; ++n) rows[n - 1].order = n;
  std::vector<double> D(set.size());
  for (const auto& t : samples) {
    tab.eval(t, alpha_max, D.data());
    const double r = t.norm();
    for (std::size_t a = 1; a < set.size(); ++a) {
      const int n = set.order(a);
      const double bound = set.factorial(a) * std::pow(n, 0.5 * (d - 1)) * std::pow(2.0 * d / r, n + d - 2);
      rows[n - 1].max_ratio = std::max(rows[n - 1].max_ratio, std::abs(D[a]) / bound);
    }
  }
  return rows;
}

}  // namespace ha
