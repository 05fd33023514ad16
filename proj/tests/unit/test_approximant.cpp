#include <doctest.h>

#include <cmath>

#include "harmapprox/verify.hpp"

using namespace ha;

namespace {

const ExperimentInputs& inputs() {
  static const ExperimentInputs in = [] {
    ExperimentConfig c = ExperimentConfig::benchmark();
    c.sampling.seminorm_samples = 800;
    return prepare_inputs(c);
  }();
  return in;
}

const HarmonicApproximant& level2() {
  static const HarmonicApproximant G = build_approximant(inputs().f, inputs().K, 2);
  return G;
}

}  // namespace

TEST_SUITE("approximant") {
  TEST_CASE("structure of the level-2 build") {
    const HarmonicApproximant& G = level2();
    CHECK(G.level == 2);
    CHECK(G.ell == doctest::Approx(0.25));
    CHECK(G.delta > 0);
    CHECK(G.delta < G.ell);
    CHECK(G.cubes.size() == G.balls.size());
    CHECK(G.F.size() == G.cubes.size());
    const NearCubes nc = cubes_meeting_K(2, inputs().K);
    CHECK(G.cubes.size() == nc.Dprime.size());
    for (std::size_t i = 0; i < G.cubes.size(); ++i) {
      CHECK(verify_porosity_ball(G.balls[i], G.cubes[i].cube(), inputs().K));
      CHECK(G.F[i].order == 1);
    }
  }

  TEST_CASE("G is harmonic on the delta-neighbourhood") {
    const HarmonicApproximant& G = level2();
    const auto anchors = lattice_anchors(inputs(), 4);
    const NeighborhoodGrid grid = neighborhood_grid(inputs().K, G.delta / 2, G.delta / 4, G.delta / 2, anchors);
    REQUIRE(!grid.points.empty());
    const HarmonicityReport a = harmonicity_residual(G, grid, G.delta / 8, G.delta / 8);
    const HarmonicityReport b = harmonicity_residual(G, grid, G.delta / 16, G.delta / 8);
    CHECK(a.used > 0);
    // Pure O(h^2) truncation: the residual drops by about four.
    CHECK(a.residual / b.residual == doctest::Approx(4.0).epsilon(0.25));
  }

  TEST_CASE("f - G is small on K and the sampled sup error is consistent") {
    const HarmonicApproximant& G = level2();
    const auto pts = select_samples(inputs().K, 200, inputs().singular_hints, 16);
    const ErrorReport e = sup_error(G, pts, inputs().fnorm, inputs().w);
    CHECK(e.points == pts.size());
    CHECK(e.jackson_ratio > 0);
    CHECK(e.jackson_ratio < 50);
    const double direct = std::abs(inputs().f(e.argmax) - evaluate(G, e.argmax));
    CHECK(direct == doctest::Approx(e.sup_error).epsilon(1e-8));
  }

  TEST_CASE("neighbourhood grid respects its limit") {
    const auto& K = inputs().K;
    const NeighborhoodGrid g = neighborhood_grid(K, 0.05, 0.01, 0.05, {Vec{0.5, 0.5, 0.5}});
    CHECK(!g.points.empty());
    for (const auto& p : g.points) CHECK(K.dist(p) + 2 * K.eta < 0.05);
  }

  TEST_CASE("library self-checks on the level-2 build") {
    for (const CheckResult& r : {check_gradient_fd(inputs(), level2()), check_serialization(inputs(), level2()),
                                 check_scaling(inputs(), level2()), check_constant_field(inputs())}) {
      INFO(format_check(r));
      CHECK(r.status == CheckStatus::Pass);
    }
  }

  TEST_CASE("certificate: constants certify zero and scales are monotone") {
    const auto w = ContinuityModulus::power(0.5);
    std::vector<Vec> pts;
    std::vector<double> vals;
    for (int i = 0; i < 40; ++i) {
      pts.push_back(Vec{0.5 + i / 40.0, 0.5, 0.5});
      vals.push_back(std::sqrt(i / 40.0));
    }
    std::vector<FamilyLevel> fam;
    for (int j = 2; j <= 6; ++j) fam.push_back({j, std::ldexp(1.0, -j - 2), 0.5 * std::ldexp(1.0, -(j + 2) / 2), 0.7});
    const Certificate c = certify_lip_from_family(fam, w, pts, vals);
    CHECK(c.bound > 0);
    CHECK(c.pairs_used > 0);
    CHECK(c.direct_on_pairs <= 1.0 + 1e-12);
    const Certificate big = certify_lip_from_family(fam, w, pts, vals, 2.0, 2.0);
    CHECK(big.bound >= c.bound);
    std::vector<FamilyLevel> zero = fam;
    for (auto& z : zero) z.sup_error = z.sup_gradient = 0;
    CHECK(certify_lip_from_family(zero, w, pts, std::vector<double>(pts.size(), 3.0)).bound == 0.0);
  }

  TEST_CASE("preconditions") {
    CHECK_THROWS_AS(build_approximant(inputs().f, inputs().K, 1), InvalidArgument);
    const PorousCompact K2 = generate_cantor_dust(2, 5, 1.0 / 3.0);
    const ScalarField f2 = constant_field(2, 1.0, K2.bounding);
    CHECK_THROWS_AS(build_approximant(f2, K2, 3), InvalidArgument);
  }
}
