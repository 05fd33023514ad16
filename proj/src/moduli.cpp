#include "harmapprox/moduli.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "harmapprox/parallel.hpp"

namespace ha {

ContinuityModulus ContinuityModulus::power(double s) {
  if (!(s > 0 && s <= 1)) throw InvalidArgument("power modulus needs s in (0,1]");
  ContinuityModulus w;
  w.kind_ = Kind::Power;
  w.s_ = s;
  return w;
}

ContinuityModulus ContinuityModulus::power_log(double s, double kappa) {
  if (!(s > 0 && s < 1)) throw InvalidArgument("power_log modulus needs s in (0,1)");
  if (!(kappa >= 0 && kappa < s)) throw InvalidArgument("power_log modulus needs 0 <= kappa < s");
  if (s * (1 - s) < kappa * std::abs(1 - 2 * s)) throw InvalidArgument("power_log modulus is not concave for this kappa");
  ContinuityModulus w;
  w.kind_ = Kind::PowerLog;
  w.s_ = s;
  w.kappa_ = kappa;
  return w;
}

ContinuityModulus ContinuityModulus::tabulated(std::vector<double> t, std::vector<double> v) {
  if (t.size() != v.size() || t.empty()) throw InvalidArgument("tabulated modulus needs matching nonempty knots");
  if (t.front() != 0.0) {
    t.insert(t.begin(), 0.0);
    v.insert(v.begin(), 0.0);
  }
  if (v.front() != 0.0) throw InvalidArgument("tabulated modulus must vanish at 0");
  double prev_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw InvalidArgument("tabulated knots must increase");
    const double slope = (v[i] - v[i - 1]) / (t[i] - t[i - 1]);
    if (slope < 0) throw InvalidArgument("tabulated modulus must be nondecreasing");
    if (slope > prev_slope * (1 + 1e-12)) throw InvalidArgument("tabulated modulus must be concave");
    prev_slope = slope;
  }
  ContinuityModulus w;
  w.kind_ = Kind::Tabulated;
  w.kt_ = std::move(t);
  w.kw_ = std::move(v);
  return w;
}

double ContinuityModulus::operator()(double t) const {
  if (t < 0) throw InvalidArgument("modulus argument must be nonnegative");
  if (t == 0) return 0.0;
  switch (kind_) {
    case Kind::Power:
      return std::pow(t, s_);
    case Kind::PowerLog:
      if (t <= 1) return std::pow(t, s_) * (1 + kappa_ * std::log(1 / t));
      return 1.0 + (s_ - kappa_) * (t - 1);
    case Kind::Tabulated: {
      if (t >= kt_.back()) return kw_.back();
      const auto it = std::upper_bound(kt_.begin(), kt_.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - kt_.begin());
      const double a = (t - kt_[i - 1]) / (kt_[i] - kt_[i - 1]);
      return kw_[i - 1] + a * (kw_[i] - kw_[i - 1]);
    }
  }
  return 0.0;
}

nlohmann::json ContinuityModulus::to_json() const {
  switch (kind_) {
    case Kind::Power:
      return {{"kind", "power"}, {"s", s_}};
    case Kind::PowerLog:
      return {{"kind", "power_log"}, {"s", s_}, {"kappa", kappa_}};
    case Kind::Tabulated:
      return {{"kind", "tabulated"}, {"t", kt_}, {"w", kw_}};
  }
  return {};
}

ContinuityModulus ContinuityModulus::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") return power(j.at("s").get<double>());
  if (kind == "power_log") return power_log(j.at("s").get<double>(), j.at("kappa").get<double>());
  if (kind == "tabulated")
    return tabulated(j.at("t").get<std::vector<double>>(), j.at("w").get<std::vector<double>>());
  throw InvalidArgument("unknown modulus kind: " + kind);
}

double modulus_eval(const ContinuityModulus& w, double t) { return w(t); }

double doubling_constant(const ContinuityModulus& w, const std::vector<double>& scales) {
  double c = 0;
  for (double s : scales) {
    if (!(s > 0)) throw InvalidArgument("doubling scales must be positive");
    const double base = w(s);
    if (base > 0) c = std::max(c, w(2 * s) / base);
  }
  return c;
}

double concavity_defect(const ContinuityModulus& w, double tmax, int n) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double t1 = tmax * a / (n - 1), t2 = tmax * b / (n - 1);
      worst = std::max(worst, 0.5 * (w(t1) + w(t2)) - w(0.5 * (t1 + t2)));
    }
  return worst;
}

LipschitzSeminorm lip_seminorm(const std::vector<Vec>& pts, const std::vector<double>& vals,
                               const ContinuityModulus& w, const SeminormOptions& opt) {
  const std::size_t n = pts.size();
  if (n < 2 || vals.size() != n) throw InvalidArgument("seminorm needs at least two samples with values");
  LipschitzSeminorm best;
  best.value = -1;
  auto consider = [&](LipschitzSeminorm& acc, std::size_t i, std::size_t j) {
    const double r = dist(pts[i], pts[j]);
    if (r == 0) return;
    ++acc.pairs;
    const double q = std::abs(vals[i] - vals[j]) / w(r);
    if (q > acc.value) {
      acc.value = q;
      acc.witness_i = i;
      acc.witness_j = j;
    }
  };
  const std::size_t total = n * (n - 1) / 2;
  if (total <= opt.exact_pair_limit) {
    std::vector<LipschitzSeminorm> part(n);
    parallel_for(n, [&](std::size_t i) {
      part[i].value = -1;
      for (std::size_t j = i + 1; j < n; ++j) consider(part[i], i, j);
    });
    best.pairs = 0;
    for (const auto& p : part) {
      best.pairs += p.pairs;
      if (p.value > best.value) {
        best.value = p.value;
        best.witness_i = p.witness_i;
        best.witness_j = p.witness_j;
      }
    }
    best.exact = true;
  } else {
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < opt.sampled_pairs; ++k) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (i != j) consider(best, i, j);
    }
    best.exact = false;
  }
  if (best.pairs == 0) throw InvalidArgument("all sample pairs coincide");
  best.value = std::max(best.value, 0.0);
  return best;
}

LipschitzSeminorm lip_seminorm(const std::function<double(const Vec&)>& f, const std::vector<Vec>& pts,
                               const ContinuityModulus& w, const SeminormOptions& opt) {
  std::vector<double> vals(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { vals[i] = f(pts[i]); });
  return lip_seminorm(pts, vals, w, opt);
}

}  // namespace ha
