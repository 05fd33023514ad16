#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harmapprox/core.hpp"

namespace ha {

class ContinuityModulus {
 public:
  enum class Kind { Power, PowerLog, Tabulated };

  static ContinuityModulus power(double s);
  // t^s (1 + kappa log(1/t)) on [0,1], continued linearly beyond 1.
  static ContinuityModulus power_log(double s, double kappa);
  // Piecewise linear through (t_i, w_i) starting at (0,0), constant after the last knot.
  static ContinuityModulus tabulated(std::vector<double> t, std::vector<double> w);

  double operator()(double t) const;
  Kind kind() const { return kind_; }
  double exponent() const { return s_; }
  double kappa() const { return kappa_; }

  nlohmann::json to_json() const;
  static ContinuityModulus from_json(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::Power;
  double s_ = 1.0, kappa_ = 0.0;
  std::vector<double> kt_, kw_;
};

double modulus_eval(const ContinuityModulus& w, double t);

double doubling_constant(const ContinuityModulus& w, const std::vector<double>& scales);

// Largest midpoint-concavity defect (w(t1)+w(t2))/2 - w((t1+t2)/2) over an
// n-point grid of [0, tmax]; nonpositive for a concave modulus.
double concavity_defect(const ContinuityModulus& w, double tmax, int n);

struct LipschitzSeminorm {
  double value = 0;
  std::size_t witness_i = 0, witness_j = 0;
  std::size_t pairs = 0;
  bool exact = true;
};

struct SeminormOptions {
  std::size_t exact_pair_limit = 20'000'000;
  std::size_t sampled_pairs = 10'000;
  std::uint64_t seed = 7;
};

LipschitzSeminorm lip_seminorm(const std::vector<Vec>& pts, const std::vector<double>& vals,
                               const ContinuityModulus& w, const SeminormOptions& opt = {});

LipschitzSeminorm lip_seminorm(const std::function<double(const Vec&)>& f, const std::vector<Vec>& pts,
                               const ContinuityModulus& w, const SeminormOptions& opt = {});

}  // namespace ha
