#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bergman/error.hpp"
#include "experiment.hpp"

int main(int argc, char** argv) {
  using bergman::cli::ExperimentConfig;
  CLI::App app{"Weighted Bergman space sampling and interpolation experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  // Flags are collected raw and layered over the config file afterwards,
  // so a flag always wins over the same key in --config.
  std::string config_path;
  bergman::cli::Json flags = bergman::cli::Json::object();
  std::string weight, sequence, generate, measure, kind, out, isa, test_function;
  std::size_t n_radii = 0, degree = 0, m_max = 0, m = 0, grid_radial = 0, grid_angular = 0, threads = 0;
  std::size_t frame_degree = 0;
  double epsilon = 0.0, delta = 0.0, margin = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> spacings;
  bool include_self = true;

  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* o_weight = app.add_option("--weight", weight, "constant | alpha:<a> | loglog | table:<csv>");
  auto* o_n = app.add_option("--n-radii", n_radii, "truncation N");
  auto* o_deg = app.add_option("--degree", degree, "kernel series degree");
  auto* o_seq = app.add_option("--sequence", sequence, "points CSV (re,im)");
  auto* o_gen = app.add_option("--generate", generate, "generator, e.g. lattice(spacing=8, stride=1)");
  auto* o_meas = app.add_option("--measure", measure, "measure CSV (re,im,mass)");
  auto* o_mmax = app.add_option("--m-max", m_max, "largest block depth for densities");
  auto* o_m = app.add_option("--m", m, "block size for the construction");
  auto* o_eps = app.add_option("--epsilon", epsilon, "density slack used by the construction");
  auto* o_kind = app.add_option("--kind,--case", kind, "interpolation | sampling | auto");
  auto* o_seed = app.add_option("--seed", seed, "64-bit seed");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_gr = app.add_option("--grid-radial", grid_radial, "radial grid count");
  auto* o_ga = app.add_option("--grid-angular", grid_angular, "angular grid count");
  auto* o_delta = app.add_option("--delta", delta, "guard distance");
  auto* o_margin = app.add_option("--margin", margin, "classification margin");
  auto* o_sp = app.add_option("--spacings", spacings, "lattice spacings for threshold-sweep")->delimiter(',');
  auto* o_fd = app.add_option("--frame-degree", frame_degree, "largest frame degree");
  auto* o_tf = app.add_option("--test-function", test_function, "poly | one");
  auto* o_self = app.add_option("--include-self", include_self, "keep the self term at point anchors (true/false)");
  auto* o_thr = app.add_option("--threads", threads, "worker threads (0: all cores)");
  auto* o_isa = app.add_option("--isa", isa, "auto | scalar | avx2");

  for (const auto& name : bergman::cli::subcommands()) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*o_weight) flags["weight"] = weight;
  if (*o_n) flags["n_radii"] = n_radii;
  if (*o_deg) flags["degree"] = degree;
  if (*o_seq) flags["sequence"] = sequence;
  if (*o_gen) flags["generate"] = generate;
  if (*o_meas) flags["measure"] = measure;
  if (*o_mmax) flags["m_max"] = m_max;
  if (*o_m) flags["m"] = m;
  if (*o_eps) flags["epsilon"] = epsilon;
  if (*o_kind) flags["kind"] = kind;
  if (*o_seed) flags["seed"] = seed;
  if (*o_out) flags["out"] = out;
  if (*o_gr) flags["grid_radial"] = grid_radial;
  if (*o_ga) flags["grid_angular"] = grid_angular;
  if (*o_delta) flags["delta"] = delta;
  if (*o_margin) flags["margin"] = margin;
  if (*o_sp) flags["spacings"] = spacings;
  if (*o_fd) flags["frame_degree"] = frame_degree;
  if (*o_tf) flags["test_function"] = test_function;
  if (*o_self) flags["include_self"] = include_self;
  if (*o_thr) flags["threads"] = threads;
  if (*o_isa) flags["isa"] = isa;

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = bergman::cli::load_config(config_path);
    bergman::cli::apply_json(cfg, flags);
  } catch (const bergman::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  }
  return bergman::cli::run(app.get_subcommands().front()->get_name(), cfg);
}
