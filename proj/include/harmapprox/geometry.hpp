#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "harmapprox/core.hpp"
#include "harmapprox/kdtree.hpp"

namespace ha {

// Half-open axis-aligned box [lo, hi).
struct Box {
  Vec lo, hi;
};

// Half-open axis-aligned cube with minimal vertex `corner`.
struct Cube {
  Vec corner;
  double edge = 0;

  int dim() const { return corner.d; }
  Vec center() const;
  Box box() const;
  double diam() const { return edge * std::sqrt(static_cast<double>(dim())); }
  bool contains(const Vec& x) const;
  // Concentric cube with edge s * edge; dilate(2) is the double 2Q.
  Cube dilate(double s) const;
  // Closures share at least one point.
  bool closed_intersects(const Cube& o) const;
};

struct DyadicIndex {
  int level = 0;
  int d = 0;
  std::array<std::int64_t, kMaxDim> k{};

  double edge() const { return std::ldexp(1.0, -level); }
  Cube cube() const;
  bool operator==(const DyadicIndex& o) const;
  bool operator<(const DyadicIndex& o) const;
};

struct DyadicHash {
  std::size_t operator()(const DyadicIndex& q) const;
};

using DyadicSet = std::unordered_set<DyadicIndex, DyadicHash>;

// Level-j dyadic cube containing x.
DyadicIndex dyadic_index_of(const Vec& x, int level);

struct PorousCompact {
  int d = 3;
  std::function<double(const Vec&)> dist_oracle;
  // Optional exact test "box meets K"; when empty a distance-based
  // subdivision is used instead.
  std::function<bool(const Box&)> meets;
  std::vector<Vec> samples;
  Cube bounding;
  double porosity = 0.1;
  double eta = 0.0;
  nlohmann::json descriptor;

  double dist(const Vec& x) const { return dist_oracle(x); }
  bool box_meets(const Box& b) const;
};

struct PorosityBall {
  Vec center;
  double radius = 0;
  double dist_to_K = 0;  // oracle distance from the center to K
};

struct BallSearchFailure : NumericalFailure {
  BallSearchFailure(const std::string& msg, Cube q, Vec best, double best_radius)
      : NumericalFailure(msg), cube(std::move(q)), best_point(best), best_radius(best_radius) {}
  Cube cube;
  Vec best_point;
  double best_radius;
};

struct CoveringEstimate {
  double exponent = 0;
  double constant = 0;
  std::vector<std::pair<double, long long>> counts;  // (ell, N)
};

struct NearCubes {
  int level = 0;
  std::vector<DyadicIndex> D;       // cubes meeting K, sorted
  std::vector<DyadicIndex> Dprime;  // D plus all closed neighbours, sorted
};

struct PorosityAudit {
  bool passed = true;
  int balls_tested = 0;
  double worst_fraction = 1.0;  // smallest sub-ball radius / ball radius
  Vec worst_center;
  double worst_radius = 0;
};

std::vector<Cube> dyadic_cubes(int j, const Cube& R);

NearCubes cubes_meeting_K(int j, const PorousCompact& K);

// Ball search target radius fraction c' = c / 3.
double search_porosity(const PorousCompact& K);

PorosityBall find_porosity_ball(const Cube& Q, const PorousCompact& K);

// Replays the three ball invariants against the oracle.
bool verify_porosity_ball(const PorosityBall& b, const Cube& Q, const PorousCompact& K);

long long covering_count(const Cube& R, double ell, const PorousCompact& K);

CoveringEstimate estimate_covering_exponent(const PorousCompact& K, const std::vector<double>& ells);

// Product Cantor set inside R_0 = [0,2)^d on the construction cube [1/2, 3/2]^d.
// Samples are the minimal corners of the cells at `sample_depth`
// (default min(depth, 5)).
PorousCompact generate_cantor_dust(int d, int depth, double ratio, int sample_depth = -1);

PorousCompact import_point_cloud(const std::vector<Vec>& points, const Cube& R0, double c_hint,
                                 std::uint64_t seed = 12345);

// Randomized check that balls centred on K at three scales contain a
// K-free sub-ball of radius >= porosity * radius.
PorosityAudit audit_porosity(const PorousCompact& K, std::uint64_t seed, int balls_per_scale = 32);

// dist(K, boundary of R_0) >= edge / 4 over the samples.
bool check_margin(const PorousCompact& K);

std::vector<Vec> read_point_cloud_csv(const std::string& path);
void write_point_cloud_csv(const std::string& path, const std::vector<Vec>& pts);

nlohmann::json cube_to_json(const Cube& c);
Cube cube_from_json(const nlohmann::json& j);

// Rebuilds a compact from its descriptor; relative sample paths resolve
// against base_dir.
PorousCompact compact_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

// Radical-inverse sequence with a seeded shift, used by the audits.
class Halton {
 public:
  Halton(int dim, std::uint64_t seed);
  Vec next();

 private:
  int d_;
  std::uint64_t index_ = 1;
  std::array<double, kMaxDim> shift_{};
};

}  // namespace ha
