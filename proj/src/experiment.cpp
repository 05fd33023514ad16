#include "harmapprox/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "harmapprox/kdtree.hpp"
#include "harmapprox/parallel.hpp"

namespace ha {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Every n-th point so that at most cap remain; keeps the order.
std::vector<Vec> stride_cap(const std::vector<Vec>& pts, std::size_t cap) {
  if (cap == 0 || pts.size() <= cap) return pts;
  std::vector<Vec> out;
  const std::size_t step = (pts.size() + cap - 1) / cap;
  for (std::size_t i = 0; i < pts.size(); i += step) out.push_back(pts[i]);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::benchmark() {
  ExperimentConfig c;
  c.compact = {{"kind", "cantor"}, {"d", 3}, {"depth", 10}, {"ratio", 1.0 / 3.0}, {"sample_depth", 5}};
  c.field = {{"kind", "radial_power"}, {"s", 0.5}, {"x0", {0.5, 0.5, 0.5}}};
  c.modulus = {{"kind", "power"}, {"s", 0.5}};
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["compact"] = compact;
  j["field"] = field;
  j["modulus"] = modulus;
  j["field_norm"] = field_norm ? nlohmann::json(*field_norm) : nlohmann::json(nullptr);
  j["levels"] = {j_min, j_max};
  j["approximant"] = {{"transition_nodes", approx.moments.transition_nodes},
                      {"flat_nodes", approx.moments.flat_nodes},
                      {"center_order", approx.center_order},
                      {"band_nodes", approx.band_nodes},
                      {"leaf_order", approx.leaf_order},
                      {"cluster_order", approx.cluster_order},
                      {"expansion_tol", approx.expansion_tol},
                      {"valid_radius", approx.valid_radius}};
  j["sampling"] = {{"sup_samples", sampling.sup_samples},         {"near_hint", sampling.near_hint},
                   {"net_points", sampling.net_points},           {"grid_anchors", sampling.grid_anchors},
                   {"gradient_points", sampling.gradient_points}, {"harmonic_points", sampling.harmonic_points},
                   {"seminorm_samples", sampling.seminorm_samples}};
  j["seed"] = seed;
  j["threads"] = threads;
  j["out_dir"] = out_dir;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
  ExperimentConfig c = benchmark();
  c.base_dir = base_dir;
  try {
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    if (j.contains("compact")) c.compact = j.at("compact");
    if (j.contains("field")) c.field = j.at("field");
    if (j.contains("modulus")) c.modulus = j.at("modulus");
    if (j.contains("field_norm") && !j.at("field_norm").is_null()) c.field_norm = j.at("field_norm").get<double>();
    if (j.contains("levels")) {
      const auto lv = j.at("levels").get<std::vector<int>>();
      if (lv.size() != 2) throw InvalidArgument("levels must be [j_min, j_max]");
      c.j_min = lv[0];
      c.j_max = lv[1];
    }
    if (j.contains("approximant")) {
      const auto& a = j.at("approximant");
      c.approx.moments.transition_nodes = a.value("transition_nodes", c.approx.moments.transition_nodes);
      c.approx.moments.flat_nodes = a.value("flat_nodes", c.approx.moments.flat_nodes);
      c.approx.center_order = a.value("center_order", c.approx.center_order);
      c.approx.band_nodes = a.value("band_nodes", c.approx.band_nodes);
      c.approx.leaf_order = a.value("leaf_order", c.approx.leaf_order);
      c.approx.cluster_order = a.value("cluster_order", c.approx.cluster_order);
      c.approx.expansion_tol = a.value("expansion_tol", c.approx.expansion_tol);
      c.approx.valid_radius = a.value("valid_radius", c.approx.valid_radius);
    }
    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      c.sampling.sup_samples = s.value("sup_samples", c.sampling.sup_samples);
      c.sampling.near_hint = s.value("near_hint", c.sampling.near_hint);
      c.sampling.net_points = s.value("net_points", c.sampling.net_points);
      c.sampling.grid_anchors = s.value("grid_anchors", c.sampling.grid_anchors);
      c.sampling.gradient_points = s.value("gradient_points", c.sampling.gradient_points);
      c.sampling.harmonic_points = s.value("harmonic_points", c.sampling.harmonic_points);
      c.sampling.seminorm_samples = s.value("seminorm_samples", c.sampling.seminorm_samples);
    }
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  const int d = compact.value("d", 3);
  if (d < 3) throw InvalidArgument("experiments need d >= 3");
  if (j_min > j_max) throw InvalidArgument("levels must satisfy j_min <= j_max");
  if (std::ldexp(1.0, -j_min) > 0.25) throw InvalidArgument("levels need 2^-j_min <= 1/4");
  if (j_max > 12) throw InvalidArgument("levels above 12 are out of reach");
  if (approx.band_nodes < 3 || approx.leaf_order < 1 || approx.cluster_order < approx.leaf_order)
    throw InvalidArgument("invalid band quadrature settings");
  if (!(approx.expansion_tol > 0 && approx.expansion_tol < 1)) throw InvalidArgument("expansion_tol must lie in (0,1)");
  if (threads < 0) throw InvalidArgument("threads must be nonnegative");
  if (!compact.is_object() || !field.is_object() || !modulus.is_object())
    throw InvalidArgument("compact, field and modulus descriptors must be objects");
  ContinuityModulus::from_json(modulus);
}

ExperimentInputs prepare_inputs(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentInputs in;
  in.K = compact_from_json(cfg.compact, cfg.base_dir);
  in.f = field_from_json(cfg.field, in.K, cfg.base_dir);
  in.w = ContinuityModulus::from_json(cfg.modulus);
  if (!in.K.samples.empty()) {
    const KdTree tree(in.K.samples);
    for (const auto& x0 : in.f.singular_points) in.singular_hints.push_back(in.K.samples[tree.nearest(x0).first]);
  }
  if (cfg.field_norm) {
    in.fnorm = *cfg.field_norm;
  } else {
    const auto pts = select_samples(in.K, cfg.sampling.seminorm_samples, in.f.singular_points, cfg.sampling.near_hint);
    in.fnorm = pts.size() >= 2 ? lip_seminorm(in.f.value, pts, in.w).value : 0.0;
  }
  return in;
}

std::vector<Vec> sup_sample_points(const ExperimentConfig& cfg, const ExperimentInputs& in, std::size_t cap) {
  return select_samples(in.K, cap, in.f.singular_points, cfg.sampling.near_hint);
}

std::vector<Vec> lattice_anchors(const ExperimentInputs& in, int count) {
  std::vector<Vec> out = in.singular_hints;
  const auto& S = in.K.samples;
  const int rest = count - static_cast<int>(out.size());
  if (rest > 0 && !S.empty()) {
    const std::size_t step = std::max<std::size_t>(1, S.size() / static_cast<std::size_t>(rest));
    for (std::size_t i = step / 2; i < S.size() && static_cast<int>(out.size()) < count; i += step) out.push_back(S[i]);
  }
  return out;
}

LevelReport run_level(const ExperimentConfig& cfg, const ExperimentInputs& in, int level, HarmonicApproximant* G_out) {
  const auto start = std::chrono::steady_clock::now();
  LevelReport r;
  r.level = level;
  HarmonicApproximant G = build_approximant(in.f, in.K, level, cfg.approx);
  r.delta = G.delta;
  r.cubes = G.cubes.size();
  r.build_seconds = G.build_seconds;
  const double delta = G.delta, eta = in.K.eta;

  // sup over K samples and a thin K_delta net
  const auto samples = sup_sample_points(cfg, in, cfg.sampling.sup_samples);
  std::vector<Vec> pts = samples;
  for (std::size_t i = 0; i < samples.size() && i < cfg.sampling.net_points; ++i) {
    Vec y = samples[i];
    y[0] += delta / 2;
    if (in.K.dist(y) + 2 * eta < delta) pts.push_back(y);
  }
  const ErrorReport err = sup_error(G, pts, in.fnorm, in.w);
  r.sup_error = err.sup_error;
  r.jackson_ratio = err.jackson_ratio;
  r.i1 = err.i1;
  r.i2 = err.i2;
  r.max_error_estimate = err.max_error_estimate;
  r.sup_points = err.points;

  // gradient on a delta/4 lattice about the anchors plus the K samples
  const auto anchors = lattice_anchors(in, cfg.sampling.grid_anchors);
  NeighborhoodGrid grid = neighborhood_grid(in.K, delta, delta / 4, delta, anchors);
  grid.points = stride_cap(grid.points, cfg.sampling.gradient_points);
  grid.points.insert(grid.points.end(), samples.begin(), samples.end());
  const GradientReport gr = sup_gradient(G, grid, in.fnorm, in.w);
  r.sup_grad = gr.sup_gradient;
  r.bernstein_ratio = gr.bernstein_ratio;
  r.grad_points = gr.points;

  // harmonicity on K_{delta/2}, steps delta/8 and delta/16
  NeighborhoodGrid hgrid = neighborhood_grid(in.K, delta / 2, delta / 4, delta / 2, anchors);
  hgrid.points = stride_cap(hgrid.points, cfg.sampling.harmonic_points);
  const HarmonicityReport h1 = harmonicity_residual(G, hgrid, delta / 8, delta / 8);
  const HarmonicityReport h2 = harmonicity_residual(G, hgrid, delta / 16, delta / 8);
  r.harm_residual = h1.residual;
  r.harm_residual_half = h2.residual;
  r.harm_ratio = h2.residual > 0 ? h1.residual / h2.residual : 0.0;
  r.harm_points = h1.used;
  r.harm_skipped = h1.skipped;
  if (h1.skipped > 0)
    r.warnings.push_back("level " + std::to_string(level) + ": " + std::to_string(h1.skipped) +
                         " harmonicity stencils left K_delta and were skipped");
  if (h1.used == 0) r.warnings.push_back("level " + std::to_string(level) + ": no harmonicity stencil fits");
  r.seconds = seconds_since(start);
  if (G_out) *G_out = std::move(G);
  return r;
}

std::string report_csv_header() { return "j,delta,sup_error,jackson_ratio,sup_grad,bernstein_ratio,harm_residual,i1,i2,seconds"; }

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string report_csv_row(const LevelReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.3f", r.level, r.delta,
                r.sup_error, r.jackson_ratio, r.sup_grad, r.bernstein_ratio, r.harm_residual, r.i1, r.i2, r.seconds);
  return buf;
}

std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ha
