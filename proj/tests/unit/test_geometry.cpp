#include <doctest.h>

#include <cmath>
#include <set>

#include "harmapprox/geometry.hpp"

using namespace ha;

namespace {

// Depth-n intervals of the middle-third Cantor set on [1/2, 3/2], built
// independently of the generator.
std::vector<std::pair<double, double>> cantor_intervals(int depth) {
  std::vector<std::pair<double, double>> iv{{0.5, 1.5}};
  for (int k = 0; k < depth; ++k) {
    std::vector<std::pair<double, double>> next;
    for (auto [a, b] : iv) {
      const double w = (b - a) / 3;
      next.push_back({a, a + w});
      next.push_back({b - w, b});
    }
    iv = next;
  }
  return iv;
}

// Blocks [m ell, (m+1) ell) meeting the 1D set; the 3D count is its cube.
long long blocks_1d(const std::vector<std::pair<double, double>>& iv, double ell) {
  std::set<long long> m;
  for (auto [a, b] : iv)
    for (long long k = static_cast<long long>(std::floor(a / ell)); k * ell <= b; ++k) m.insert(k);
  return static_cast<long long>(m.size());
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("dyadic subdivision of the unit cube") {
    const Cube R{Vec{0.0, 0.0, 0.0}, 1.0};
    const auto cubes = dyadic_cubes(1, R);
    CHECK(cubes.size() == 8);
    for (const auto& q : cubes) CHECK(q.edge == doctest::Approx(0.5));
  }

  TEST_CASE("cube containment and dilation") {
    const Cube Q{Vec{1.0, 1.0, 1.0}, 0.5};
    CHECK(Q.contains(Vec{1.0, 1.2, 1.49}));
    CHECK_FALSE(Q.contains(Vec{1.5, 1.2, 1.2}));
    const Cube Q2 = Q.dilate(2);
    CHECK(Q2.edge == doctest::Approx(1.0));
    CHECK(Q2.center()[0] == doctest::Approx(Q.center()[0]));
  }

  TEST_CASE("dyadic index of a point") {
    const DyadicIndex q = dyadic_index_of(Vec{0.3, 0.7, 1.9}, 2);
    CHECK(q.k[0] == 1);
    CHECK(q.k[1] == 2);
    CHECK(q.k[2] == 7);
    CHECK(q.cube().contains(Vec{0.3, 0.7, 1.9}));
  }

  TEST_CASE("covering counts match an independent Cantor enumeration") {
    const PorousCompact K = generate_cantor_dust(3, 10, 1.0 / 3.0, 5);
    const auto iv = cantor_intervals(10);
    for (int k = 2; k <= 6; ++k) {
      const double ell = std::ldexp(1.0, -k);
      const long long n1 = blocks_1d(iv, ell);
      CHECK(covering_count(K.bounding, ell, K) == n1 * n1 * n1);
    }
    for (int k = 1; k <= 5; ++k) {
      const double ell = std::pow(3.0, -k);
      const long long n1 = blocks_1d(iv, ell);
      CHECK(covering_count(K.bounding, ell, K) == n1 * n1 * n1);
    }
  }

  TEST_CASE("Cantor depth 4 covering exponent") {
    const PorousCompact K = generate_cantor_dust(3, 4, 1.0 / 3.0);
    std::vector<double> ells;
    for (int k = 2; k <= 6; ++k) ells.push_back(std::ldexp(1.0, -k));
    const auto est = estimate_covering_exponent(K, ells);
    CHECK(std::abs(est.exponent - std::log(8.0) / std::log(3.0)) < 0.1);
    for (auto [ell, n] : est.counts) CHECK(n <= est.constant * std::pow(K.bounding.edge / ell, est.exponent) * (1 + 1e-12));
  }

  TEST_CASE("covering counts are monotone in the scale") {
    const PorousCompact K = generate_cantor_dust(3, 6, 1.0 / 3.0);
    long long prev = 0;
    for (int k = 3; k <= 7; ++k) {
      const long long n = covering_count(K.bounding, std::ldexp(1.0, -k), K);
      CHECK(n >= prev);
      prev = n;
    }
  }

  TEST_CASE("segment point cloud has covering exponent near one") {
    std::vector<Vec> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(Vec{0.6 + 0.8 * i / 99.0, 1.0, 1.0});
    const PorousCompact K = import_point_cloud(pts, Cube{Vec{0.0, 0.0, 0.0}, 2.0}, 0.3);
    std::vector<double> ells;
    for (int k = 3; k <= 6; ++k) ells.push_back(std::ldexp(1.0, -k));
    CHECK(std::abs(estimate_covering_exponent(K, ells).exponent - 1.0) < 0.15);
  }

  TEST_CASE("near cubes and porosity balls") {
    const PorousCompact K = generate_cantor_dust(3, 8, 1.0 / 3.0, 4);
    const NearCubes nc = cubes_meeting_K(3, K);
    const long long n1 = blocks_1d(cantor_intervals(8), 0.125);
    CHECK(static_cast<long long>(nc.D.size()) == n1 * n1 * n1);
    CHECK(nc.Dprime.size() >= nc.D.size());
    const DyadicSet dp(nc.Dprime.begin(), nc.Dprime.end());
    for (const auto& q : nc.D) CHECK(dp.count(q) == 1);
    for (std::size_t i = 0; i < nc.Dprime.size(); i += 37) {
      const Cube Q = nc.Dprime[i].cube();
      const PorosityBall b = find_porosity_ball(Q, K);
      CHECK(verify_porosity_ball(b, Q, K));
      CHECK(b.dist_to_K >= b.radius);
    }
  }

  TEST_CASE("level precondition of the near-cube search") {
    const PorousCompact K = generate_cantor_dust(3, 6, 1.0 / 3.0);
    CHECK_THROWS_AS(cubes_meeting_K(1, K), InvalidArgument);
  }

  TEST_CASE("Cantor dust respects the margin and porosity audit") {
    const PorousCompact K = generate_cantor_dust(3, 6, 1.0 / 3.0);
    CHECK(check_margin(K));
    CHECK(audit_porosity(K, 7).passed);
    CHECK(K.dist(Vec{0.5, 0.5, 0.5}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(K.dist(Vec{1.0, 1.0, 1.0}) > 0.1);
  }

  TEST_CASE("point cloud errors") {
    CHECK_THROWS_AS(read_point_cloud_csv("/nonexistent/cloud.csv"), InvalidArgument);
    CHECK_THROWS_AS(import_point_cloud({Vec{0.01, 1.0, 1.0}}, Cube{Vec{0.0, 0.0, 0.0}, 2.0}, 0.3), InvalidArgument);
    try {
      compact_from_json({{"kind", "point_cloud"}, {"samples", "missing_file.csv"}}, "/tmp");
      FAIL("expected an exception");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("missing_file.csv") != std::string::npos);
    }
  }

  TEST_CASE("kd-tree nearest neighbour agrees with brute force") {
    Halton h(3, 3);
    std::vector<Vec> pts;
    for (int i = 0; i < 500; ++i) pts.push_back(h.next());
    const KdTree tree(pts);
    for (int q = 0; q < 50; ++q) {
      const Vec x = h.next();
      double best = 1e300;
      for (const auto& p : pts) best = std::min(best, dist(p, x));
      CHECK(tree.nearest(x).second == doctest::Approx(best));
    }
  }
}
