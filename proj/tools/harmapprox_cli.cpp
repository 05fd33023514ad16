#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "harmapprox/experiment.hpp"
#include "harmapprox/parallel.hpp"
#include "harmapprox/verify.hpp"

namespace fs = std::filesystem;
using namespace ha;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path, out_dir, levels;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
  bool print_config = false;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = ExperimentConfig::benchmark();
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw UsageError("cannot open config file: " + c.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file " + c.config_path + " is not valid JSON: " + e.what());
    }
    const fs::path base = fs::path(c.config_path).parent_path();
    cfg = ExperimentConfig::from_json(j, base.empty() ? "." : base.string());
  }
  if (!c.levels.empty()) {
    const auto dots = c.levels.find("..");
    if (dots == std::string::npos) throw UsageError("--levels expects a..b, got " + c.levels);
    try {
      cfg.j_min = std::stoi(c.levels.substr(0, dots));
      cfg.j_max = std::stoi(c.levels.substr(dots + 2));
    } catch (const std::exception&) {
      throw UsageError("--levels expects integers a..b, got " + c.levels);
    }
  }
  if (c.seed_set) cfg.seed = c.seed;
  if (c.threads >= 0) cfg.threads = c.threads;
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  cfg.validate();
  if (cfg.threads > 0) set_threads(cfg.threads);
  return cfg;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

std::string approximant_file(int j) { return "approximant_j" + std::to_string(j) + ".json"; }

// ---- generate-set -----------------------------------------------------------

int cmd_generate_set(const ExperimentConfig& cfg) {
  const PorousCompact K = compact_from_json(cfg.compact, cfg.base_dir);
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  std::vector<double> ells;
  for (int k = 3; k <= 7; ++k) ells.push_back(K.bounding.edge * std::ldexp(1.0, -k));
  const CoveringEstimate est = estimate_covering_exponent(K, ells);
  std::ostringstream csv;
  csv << "ell,count\n";
  for (const auto& [ell, n] : est.counts) csv << fmt_double(ell) << ',' << n << '\n';
  csv << "# lambda," << fmt_double(est.exponent) << "\n# C_lambda," << fmt_double(est.constant) << '\n';
  write_text(out / "covering.csv", csv.str());
  nlohmann::json desc = K.descriptor;
  desc["samples_count"] = K.samples.size();
  desc["porosity"] = K.porosity;
  desc["eta"] = K.eta;
  desc["bounding"] = cube_to_json(K.bounding);
  write_text(out / "set.json", desc.dump(2) + "\n");
  const PorosityAudit audit = audit_porosity(K, cfg.seed);
  const bool margin = check_margin(K);
  std::printf("lambda %.4f  C_lambda %.4f  samples %zu\n", est.exponent, est.constant, K.samples.size());
  std::printf("porosity audit: %s (%d balls, worst fraction %.4f vs c %.4f); margin %s\n",
              audit.passed ? "passed" : "FAILED", audit.balls_tested, audit.worst_fraction, K.porosity,
              margin ? "ok" : "VIOLATED");
  if (!audit.passed || !margin) {
    std::fprintf(stderr, "porosity audit failed near (%g, %g, ...) at radius %g\n", audit.worst_center[0],
                 audit.worst_center[1], audit.worst_radius);
    return 1;
  }
  return 0;
}

// ---- convergence ------------------------------------------------------------

int cmd_convergence(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  const ExperimentInputs in = prepare_inputs(cfg);
  std::ofstream csv(out / "convergence.csv"), plot(out / "plot.csv"), diag(out / "diagnostics.csv");
  if (!csv || !plot || !diag) throw std::runtime_error("cannot write into " + out.string());
  csv << report_csv_header() << '\n' << std::flush;
  plot << "log2_inv_delta,log_error,log_omega\n" << std::flush;
  diag << "j,delta,cubes,max_error_estimate,harm_residual_half,harm_ratio,sup_points,grad_points,harm_points,"
          "harm_skipped,build_seconds\n"
       << std::flush;
  nlohmann::json manifest;
  manifest["tool"] = "harmapprox";
  manifest["version"] = kVersion;
  manifest["config_hash"] = config_hash(cfg.to_json());
  manifest["config"] = cfg.to_json();
  manifest["field_norm"] = in.fnorm;
  manifest["levels"] = nlohmann::json::array();
  manifest["warnings"] = nlohmann::json::array();
  bool failed = false;
  auto flush_manifest = [&] {
    manifest["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
  };
  for (int j = cfg.j_min; j <= cfg.j_max; ++j) {
    try {
      HarmonicApproximant G;
      const LevelReport r = run_level(cfg, in, j, &G);
      csv << report_csv_row(r) << '\n' << std::flush;
      plot << fmt_double(std::log2(1 / r.delta)) << ',' << fmt_double(std::log(r.sup_error)) << ','
           << fmt_double(std::log(in.w(r.delta))) << '\n'
           << std::flush;
      diag << r.level << ',' << fmt_double(r.delta) << ',' << r.cubes << ',' << fmt_double(r.max_error_estimate) << ','
           << fmt_double(r.harm_residual_half) << ',' << fmt_double(r.harm_ratio) << ',' << r.sup_points << ','
           << r.grad_points << ',' << r.harm_points << ',' << r.harm_skipped << ',' << fmt_double(r.build_seconds)
           << '\n'
           << std::flush;
      write_text(out / approximant_file(j), G.to_json().dump() + "\n");
      manifest["levels"].push_back({{"j", j},
                                    {"status", "ok"},
                                    {"build_seconds", r.build_seconds},
                                    {"seconds", r.seconds},
                                    {"approximant", approximant_file(j)}});
      for (const auto& w : r.warnings) manifest["warnings"].push_back(w);
      std::printf("%s\n", report_csv_row(r).c_str());
      std::fflush(stdout);
    } catch (const std::exception& e) {
      failed = true;
      manifest["levels"].push_back({{"j", j}, {"status", "failed"}, {"error", e.what()}});
      manifest["warnings"].push_back("level " + std::to_string(j) + " failed: " + e.what());
      std::fprintf(stderr, "level %d failed: %s\n", j, e.what());
    }
    flush_manifest();
  }
  flush_manifest();
  return failed ? 1 : 0;
}

// ---- verify -----------------------------------------------------------------

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  const auto results = run_suite(suite, seed);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%s\n", format_check(r).c_str());
    ok = ok && r.status == CheckStatus::Pass;
  }
  std::printf("%zu checks, %s\n", results.size(), ok ? "all passed" : "failures present");
  return ok ? 0 : 1;
}

// ---- certify ----------------------------------------------------------------

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError("missing convergence CSV: " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int cmd_certify(const ExperimentConfig& cfg, const std::string& csv_path, double c1_scale, double c2_scale) {
  const fs::path out = cfg.out_dir;
  const fs::path csv = csv_path.empty() ? out / "convergence.csv" : fs::path(csv_path);
  const auto rows = read_csv(csv);
  if (rows.size() < 2 || rows[0].size() < 10 || rows[0][0] != "j") throw UsageError("not a convergence CSV: " + csv.string());
  std::vector<FamilyLevel> fam;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 10) throw UsageError("malformed row in " + csv.string());
    FamilyLevel L{std::stoi(r[0]), std::stod(r[1]), std::stod(r[2]), std::stod(r[4])};
    const fs::path ap = csv.parent_path() / approximant_file(L.level);
    std::ifstream in(ap);
    if (!in) throw UsageError("missing approximant serialization: " + ap.string());
    nlohmann::json j;
    in >> j;
    if (j.value("level", -1) != L.level || std::abs(j.value("delta", 0.0) - L.delta) > 1e-12 * L.delta)
      throw UsageError("approximant " + ap.string() + " does not match its CSV row");
    fam.push_back(L);
  }
  const ExperimentInputs in = prepare_inputs(cfg);
  const auto pts = sup_sample_points(cfg, in, cfg.sampling.seminorm_samples);
  std::vector<double> vals(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = in.f(pts[i]);
  const Certificate c = certify_lip_from_family(fam, in.w, pts, vals, c1_scale, c2_scale);
  const double direct = lip_seminorm(pts, vals, in.w).value;
  nlohmann::json res = {{"certified_bound", c.bound},   {"direct_seminorm", direct},
                        {"ratio", direct > 0 ? c.bound / direct : 0.0},
                        {"C1", c.C1},                   {"C2", c.C2},
                        {"direct_on_used_pairs", c.direct_on_pairs},
                        {"pairs_used", c.pairs_used},   {"pairs_skipped", c.pairs_skipped},
                        {"levels", fam.size()},         {"config_hash", config_hash(cfg.to_json())}};
  fs::create_directories(out);
  write_text(out / "certificate.json", res.dump(2) + "\n");
  std::printf("certified ||f||_w <= %.6g   direct sampled %.6g   ratio %.3f   (C1 %.4g, C2 %.4g, %zu pairs, %zu skipped)\n",
              c.bound, direct, direct > 0 ? c.bound / direct : 0.0, c.C1, c.C2, c.pairs_used, c.pairs_skipped);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic approximation on porous compacts: level sweeps, certificates and invariant suites"};
  app.set_version_flag("--version", kVersion);
  Common c;
  auto add_common = [&c](CLI::App* a) {
    a->add_option("--config", c.config_path, "JSON config file (defaults: the Cantor benchmark)");
    a->add_option("--out", c.out_dir, "output directory");
    a->add_option("--levels", c.levels, "level range a..b");
    a->add_option("--seed", c.seed, "seed for randomized audits")->each([&c](const std::string&) { c.seed_set = true; });
    a->add_option("--threads", c.threads, "worker threads (0 = hardware)");
    a->add_flag("--print-config", c.print_config, "print the effective config with all defaults and exit");
  };
  add_common(&app);
  auto* gen = app.add_subcommand("generate-set", "write the set descriptor and covering report");
  add_common(gen);
  auto* conv = app.add_subcommand("convergence", "run the level sweep");
  add_common(conv);
  std::string suite;
  auto* ver = app.add_subcommand("verify", "run an invariant suite");
  add_common(ver);
  ver->add_option("suite", suite, "geometry, partition, kernel, localization, approximant or all")->required();
  std::string csv_path;
  double c1 = 1, c2 = 1;
  auto* cert = app.add_subcommand("certify", "sufficiency certificate from a finished sweep");
  add_common(cert);
  cert->add_option("--csv", csv_path, "convergence CSV (default OUT/convergence.csv)");
  cert->add_option("--c1-scale", c1, "inflate C1 by this factor");
  cert->add_option("--c2-scale", c2, "inflate C2 by this factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (c.print_config) {
      const ExperimentConfig cfg = load_config(c);
      std::printf("%s\n", cfg.to_json().dump(2).c_str());
      return 0;
    }
    if (*ver) {
      if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end()) {
        std::fprintf(stderr, "unknown suite '%s'\n%s", suite.c_str(), ver->help().c_str());
        return 2;
      }
      if (c.threads > 0) set_threads(c.threads);
      return cmd_verify(suite, c.seed_set ? c.seed : 12345);
    }
    if (!*gen && !*conv && !*cert) {
      std::fprintf(stderr, "%s", app.help().c_str());
      return 2;
    }
    const ExperimentConfig cfg = load_config(c);
    if (*gen) return cmd_generate_set(cfg);
    if (*conv) return cmd_convergence(cfg);
    return cmd_certify(cfg, csv_path, c1, c2);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: malformed descriptor: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 1;
  }
}
