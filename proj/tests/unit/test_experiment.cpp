#include <doctest.h>

#include "harmapprox/experiment.hpp"

using namespace ha;

TEST_SUITE("experiment") {
  TEST_CASE("config round trip keeps every setting") {
    ExperimentConfig c = ExperimentConfig::benchmark();
    c.j_min = 3;
    c.j_max = 4;
    c.seed = 99;
    c.approx.band_nodes = 7;
    c.sampling.sup_samples = 321;
    c.field_norm = 1.25;
    const nlohmann::json j = c.to_json();
    const ExperimentConfig r = ExperimentConfig::from_json(nlohmann::json::parse(j.dump()));
    CHECK(r.to_json() == j);
    CHECK(r.j_min == 3);
    CHECK(r.approx.band_nodes == 7);
    CHECK(r.sampling.sup_samples == 321);
    REQUIRE(r.field_norm.has_value());
    CHECK(*r.field_norm == 1.25);
  }

  TEST_CASE("missing keys fall back to the benchmark") {
    const ExperimentConfig r = ExperimentConfig::from_json({{"seed", 5}});
    ExperimentConfig b = ExperimentConfig::benchmark();
    b.seed = 5;
    CHECK(r.to_json() == b.to_json());
  }

  TEST_CASE("validation rejects bad settings") {
    CHECK_NOTHROW(ExperimentConfig::benchmark().validate());
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"levels", {5, 2}}}), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"levels", {1, 3}}}), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"levels", {2, 40}}}), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"seed", "abc"}}), InvalidArgument);
    ExperimentConfig c = ExperimentConfig::benchmark();
    c.compact["d"] = 2;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }

  TEST_CASE("config hash is stable and sensitive") {
    const ExperimentConfig c = ExperimentConfig::benchmark();
    const std::string h = config_hash(c.to_json());
    CHECK(h.size() == 16);
    CHECK(config_hash(ExperimentConfig::benchmark().to_json()) == h);
    ExperimentConfig d = c;
    d.seed = c.seed + 1;
    CHECK(config_hash(d.to_json()) != h);
  }

  TEST_CASE("CSV row matches the header") {
    const std::string head = report_csv_header();
    LevelReport r;
    r.level = 3;
    r.delta = 0.125;
    r.sup_error = 1e-3;
    const std::string row = report_csv_row(r);
    auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
    CHECK(count(head) == count(row));
    CHECK(head.rfind("j,delta,sup_error,", 0) == 0);
    CHECK(row.rfind("3,", 0) == 0);
    CHECK(fmt_double(0.1) == "0.1");
    CHECK(fmt_double(1.0 / 3) == "0.3333333333");
  }

  TEST_CASE("benchmark inputs") {
    ExperimentConfig c = ExperimentConfig::benchmark();
    c.sampling.seminorm_samples = 500;
    const ExperimentInputs in = prepare_inputs(c);
    CHECK(in.K.d == 3);
    CHECK(in.fnorm > 0.9);
    CHECK(in.fnorm <= 1.0 + 1e-12);
    CHECK(in.w(0.25) == doctest::Approx(0.5));
    REQUIRE_FALSE(in.singular_hints.empty());
    CHECK(dist(in.singular_hints[0], Vec{0.5, 0.5, 0.5}) < 1e-9);
    const auto anchors = lattice_anchors(in, 8);
    CHECK(anchors.size() == 8);
    const auto pts = sup_sample_points(c, in, 200);
    CHECK(pts.size() >= 200);
    for (const auto& p : pts) CHECK(in.K.dist(p) < 1e-9);
  }
}
