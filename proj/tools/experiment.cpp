#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "bergman/carleson.hpp"
#include "bergman/certify.hpp"
#include "bergman/construction.hpp"
#include "bergman/densities.hpp"
#include "bergman/error.hpp"
#include "bergman/geometry.hpp"
#include "bergman/io.hpp"
#include "bergman/kernels.hpp"
#include "bergman/parallel.hpp"
#include "bergman/rng.hpp"
#include "bergman/space.hpp"
#include "bergman/weights.hpp"

namespace bergman::cli {
namespace {

template <class T>
T field(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config field '" + key + "': wrong type (" + std::string(j.type_name()) + ")");
  }
}

std::size_t count_field(const Json& j, const std::string& key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ValidationError("config field '" + key + "': expected a non-negative integer");
  }
  const auto v = j.get<long long>();
  if (v < 0) throw ValidationError("config field '" + key + "': expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

struct Context {
  ExperimentConfig cfg;
  std::string name;
  bool flagged = false;
  std::string flag_reason;

  [[nodiscard]] std::string path(const std::string& suffix, const std::string& ext) const {
    const std::string base = suffix.empty() ? name : name + "_" + suffix;
    std::string file = base + ext;
    std::replace(file.begin(), file.end(), '-', '_');
    return (std::filesystem::path(cfg.out) / file).string();
  }
  [[nodiscard]] io::CsvWriter csv(const std::string& table, const std::vector<std::string>& header) const {
    return {path(table, ".csv"), header};
  }
  void flag(bool on, const std::string& why) {
    if (on && !flagged) {
      flagged = true;
      flag_reason = why;
    }
  }
};

RadiiSchedule schedule_of(const ExperimentConfig& c) { return compute_radii(make_weight(c.weight), c.n_radii); }

PointSequence sequence_of(const ExperimentConfig& c, const RadiiSchedule& s) {
  if (!c.sequence.empty()) return io::read_points_csv(c.sequence);
  if (!c.generate.empty()) return io::generate_from_spec(c.generate, s);
  throw ValidationError("no sequence given: use --sequence <csv> or --generate <spec>");
}

DensityOptions density_options(const ExperimentConfig& c) {
  DensityOptions d;
  d.m_min = c.m_min;
  d.m_max = c.m_max;
  d.include_self = c.include_self;
  d.grid_radial = c.grid_radial;
  d.grid_angular = std::max<std::size_t>(c.grid_angular, 64);
  return d;
}

Json density_json(const DensityReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.per_m) rows.push_back({{"m", row.m}, {"sup", row.sup_value}, {"inf", row.inf_value}});
  return {{"d_plus_est", r.d_plus_est},
          {"d_minus_est", r.d_minus_est},
          {"slope", r.slope},
          {"increment_est", r.increment_est},
          {"anchors", r.anchor_kind == AnchorKind::points ? "points" : "grid"},
          {"anchors_used", r.anchors_used},
          {"max_anchor_index", r.max_anchor_index},
          {"closed_cutoff", r.closed_cutoff},
          {"per_m", std::move(rows)}};
}

GCase resolve_kind(const ExperimentConfig& c, const PointSequence& lambda, const RadiiSchedule& s) {
  if (c.kind == "interpolation" || c.kind == "I") return GCase::interpolation;
  if (c.kind == "sampling" || c.kind == "S") return GCase::sampling;
  ClassifyConfig cc{density_options(c), c.margin};
  const auto cl = classify(lambda, s, cc);
  if (cl.interp_candidate) return GCase::interpolation;
  if (cl.sampling_candidate) return GCase::sampling;
  throw ValidationError("sequence is neither an interpolation nor a sampling candidate; set --kind");
}

struct Built {
  GModel g;
  BuildReport report;
};

Built build(const ExperimentConfig& c, const PointSequence& lambda, const RadiiSchedule& s, GCase kind) {
  BuildOptions opt;
  opt.kind = kind;
  opt.epsilon = c.epsilon;
  opt.m = c.m;
  opt.delta = c.delta;
  opt.seed = c.seed;
  opt.density = density_options(c);
  BuildReport rep;
  GModel g = build_G(lambda, s, opt, &rep);
  return {std::move(g), std::move(rep)};
}

Json build_report_json(const BuildReport& r) {
  Json checks = Json::array();
  for (const auto& b : r.checks) checks.push_back({{"j", b.j}, {"extreme", b.extreme}, {"bound", b.bound}, {"ok", b.ok}});
  return {{"d_plus", r.d_plus},
          {"d_minus", r.d_minus},
          {"epsilon_initial", r.epsilon_initial},
          {"epsilon", r.epsilon},
          {"shrink_steps", r.shrink_steps},
          {"m", r.m},
          {"m_auto", r.m_auto},
          {"block_condition_ok", r.block_condition_ok},
          {"min_pole_zero_rho", r.min_pole_zero_rho},
          {"half_atom_spacing", r.half_atom_spacing},
          {"negative_blocks", r.negative_blocks},
          {"shifted_circles", r.shifted_circles},
          {"checks", std::move(checks)}};
}

/// Seeded data with sum |a_j|^2 / K(lambda_j, lambda_j) = 1.
std::vector<Complex> admissible_data(const PointSequence& lambda, const KernelModel& km, std::uint64_t seed,
                                     std::uint64_t stream) {
  CounterRng rng(seed, stream);
  std::vector<Complex> a(lambda.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    a[j] = Complex(rng.normal(), rng.normal()) * std::sqrt(km.diag(lambda[j]));
  }
  const double n = std::sqrt(data_norm(lambda, km, a));
  if (n > 0.0) {
    for (auto& v : a) v /= n;
  }
  return a;
}

KernelModel kernel_of(const ExperimentConfig& c, const RadiiSchedule& s) {
  if (c.degree == 0) throw ValidationError("default kernel degree is not representable; pass --degree");
  return KernelModel(s, c.degree);
}

std::size_t circle_points(const RadiiSchedule& s, std::size_t n) {
  return std::max<std::size_t>(256, static_cast<std::size_t>(std::ceil(16.0 / s.gap(n))));
}

// ---- subcommands ----

Json cmd_weight_info(Context& ctx) {
  const auto& c = ctx.cfg;
  const Weight w = make_weight(c.weight);
  const auto d = check_doubling(w, 200);
  auto csv = ctx.csv("", {"x", "gap", "w", "tail"});
  for (std::size_t k = 0; k <= 4 * c.n_radii; ++k) {
    const double g = std::exp2(-0.25 * static_cast<double>(k));
    if (g < w.trusted_gap()) break;
    csv.row({1.0 - g, g, w.density_from_gap(g), w.tail_from_gap(g)});
  }
  return {{"weight", w.describe()},
          {"power", w.power()},
          {"normalization", w.normalization()},
          {"trusted_gap", w.trusted_gap()},
          {"default_truncation", default_truncation(w)},
          {"doubling", {{"c_min", d.c_min}, {"worst_t", d.worst_t}, {"grid_size", d.grid_size}, {"passes", d.passes()}}}};
}

Json cmd_radii(Context& ctx) {
  const Weight w = make_weight(ctx.cfg.weight);
  const auto s = compute_radii(w, ctx.cfg.n_radii);
  auto csv = ctx.csv("", {"n", "r", "gap", "tail"});
  Json radii = Json::array();
  for (std::size_t n = 0; n <= s.size(); ++n) {
    csv.row({static_cast<double>(n), s.radius(n), s.gap(n), w.tail_from_gap(s.gap(n))});
    radii.push_back(s.radius(n));
  }
  return {{"N", s.size()}, {"separation", radii_separation(s)}, {"radii", std::move(radii)}};
}

Json cmd_kernel_diag(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  if (s.size() < 3) throw ValidationError("kernel-diag needs N >= 3");
  const KernelModel km = kernel_of(c, s);
  const auto grid = radial_grid(s, c.grid_radial, c.grid_angular, s.size() - 3);
  std::vector<double> K(grid.size());
  km.diag_batch(grid, K);
  auto csv = ctx.csv("", {"re", "im", "K", "ratio"});
  for (std::size_t i = 0; i < grid.size(); ++i) csv.row({grid[i].real(), grid[i].imag(), K[i], diag_ratio(km, grid[i])});
  const auto st = diag_ratio_stats(km, grid);
  ctx.flag(st.tail_flag, "kernel tail bound exceeds tolerance on the grid");
  return {{"min_ratio", st.min_ratio},   {"max_ratio", st.max_ratio},   {"spread", st.spread()},
          {"argmin", complex_json(st.argmin)}, {"argmax", complex_json(st.argmax)}, {"count", st.count},
          {"tail_flag", st.tail_flag}};
}

Json cmd_carleson_check(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  const DiscreteMeasure mu = !c.measure.empty()
                                 ? io::read_measure_csv(c.measure)
                                 : random_measure(s, c.measure_count, 1, std::max<std::size_t>(1, s.size() - 3), c.seed);
  if (mu.empty()) throw ValidationError("carleson-check needs a nonempty measure");
  const auto prof = theorem1_profile(mu, s);
  const KernelModel km = kernel_of(c, s);
  const auto direct = embedding_constant_direct(mu, km);
  ctx.flag(direct.tail_flag, "kernel tail bound exceeds tolerance at a measure atom");
  auto csv = ctx.csv("profile", {"n", "value"});
  for (std::size_t n = 0; n < prof.per_n.size(); ++n) csv.row({static_cast<double>(n), prof.per_n[n]});
  return {{"atoms", mu.size()},
          {"per_n", prof.per_n},
          {"sup", prof.sup},
          {"direct", direct.value},
          {"ratio", prof.sup > 0.0 ? direct.value / prof.sup : 0.0},
          {"tail_flag", direct.tail_flag}};
}

Json cmd_density(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  const auto lambda = sequence_of(c, s);
  DensityOptions up = density_options(c);
  up.anchors = AnchorKind::points;
  DensityOptions low = density_options(c);
  low.anchors = AnchorKind::grid;
  const auto ru = upper_density(lambda, s, up);
  const auto rl = lower_density(lambda, s, low);
  auto csv = ctx.csv("per_m", {"m", "upper_sup", "lower_inf"});
  for (std::size_t i = 0; i < ru.per_m.size(); ++i) {
    csv.row({static_cast<double>(ru.per_m[i].m), ru.per_m[i].sup_value, rl.per_m[i].inf_value});
  }
  return {{"points", lambda.size()}, {"upper", density_json(ru)}, {"lower", density_json(rl)}};
}

Json cmd_classify(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  const auto lambda = sequence_of(c, s);
  const auto cl = classify(lambda, s, ClassifyConfig{density_options(c), c.margin});
  auto csv = ctx.csv("per_m", {"m", "upper_sup", "lower_inf"});
  for (std::size_t i = 0; i < cl.lower.per_m.size(); ++i) {
    const double sup = i < cl.upper.per_m.size() ? cl.upper.per_m[i].sup_value : 0.0;
    csv.row({static_cast<double>(cl.lower.per_m[i].m), sup, cl.lower.per_m[i].inf_value});
  }
  return {{"points", lambda.size()},
          {"separated", cl.separated},
          {"separation", cl.separation},
          {"d_plus", cl.d_plus},
          {"d_minus", cl.d_minus},
          {"d_plus_finite", cl.d_plus_finite},
          {"threshold", kDensityThreshold},
          {"margin", c.margin},
          {"interp_candidate", cl.interp_candidate},
          {"sampling_candidate", cl.sampling_candidate}};
}

Json cmd_construct_g(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  const auto lambda = sequence_of(c, s);
  const GCase kind = resolve_kind(c, lambda, s);
  auto [g, rep] = build(c, lambda, s, kind);
  const auto grid = guard_grid(g, c.grid_radial, c.grid_angular, s.size() - 2, c.delta);
  const auto v = verify_G(g, grid, c.delta);
  auto atoms = ctx.csv("atoms", {"re", "im", "sign"});
  for (const auto& ci : g.circles()) {
    for (std::size_t k = 0; k < ci.count; ++k) {
      const Complex p = ci.atom(k);
      atoms.row({p.real(), p.imag(), static_cast<double>(ci.sign)});
    }
  }
  auto blocks = ctx.csv("circles", {"block", "r", "gap", "count", "sign", "target", "block_mass", "n_mass", "remainder"});
  for (const auto& ci : g.circles()) {
    blocks.row({static_cast<double>(ci.block), ci.radius, ci.gap, static_cast<double>(ci.count),
                static_cast<double>(ci.sign), ci.target, ci.block_mass, ci.n_mass, ci.remainder});
  }
  return {{"case", kind == GCase::interpolation ? "I" : "S"},
          {"points", lambda.size()},
          {"build", build_report_json(rep)},
          {"verify",
           {{"min_log_ratio", v.min_log_ratio},
            {"max_log_ratio", v.max_log_ratio},
            {"spread", v.spread()},
            {"grid_points", v.grid_points},
            {"argmin", complex_json(v.argmin)},
            {"argmax", complex_json(v.argmax)}}},
          {"model", io::gmodel_json(g)}};
}

Json certification_json(const CertificationReport& r) {
  return {{"gram_min_eig", r.gram_min_eig},
          {"gram_max_eig", r.gram_max_eig},
          {"frame_A", r.frame_A},
          {"frame_B", r.frame_B},
          {"degree_used", r.degree_used},
          {"separated", r.separated},
          {"separation", r.separation},
          {"residuals", r.residuals},
          {"norms", {{"data_norm", r.data_norm}, {"solution_norm", r.solution_norm}}},
          {"tail_flag", r.tail_flag}};
}

Json cmd_certify(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  const auto lambda = sequence_of(c, s);
  const KernelModel km = kernel_of(c, s);
  const std::size_t D = c.frame_degree;
  CertificationReport rep;
  if (c.kind == "interpolation" || c.kind == "I") {
    const auto b = build(c, lambda, s, GCase::interpolation);
    const auto data = admissible_data(lambda, km, c.seed, 0);
    rep = certify(lambda, km, D, b.g, data);
  } else {
    rep = certify(lambda, km, D);
  }
  ctx.flag(rep.tail_flag, "kernel tail bound exceeds tolerance at a sequence point");
  auto csv = ctx.csv("residuals", {"index", "re", "im", "residual"});
  for (std::size_t j = 0; j < rep.residuals.size(); ++j) {
    csv.row({static_cast<double>(j), lambda[j].real(), lambda[j].imag(), rep.residuals[j]});
  }
  Json out = certification_json(rep);
  out["points"] = lambda.size();
  return out;
}

Json cmd_interp_demo(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  const auto lambda = sequence_of(c, s);
  const KernelModel km = kernel_of(c, s);
  const auto b = build(c, lambda, s, GCase::interpolation);
  const auto a = admissible_data(lambda, km, c.seed, 0);
  auto nodes = ctx.csv("nodes", {"re", "im", "target_re", "target_im", "value_re", "value_im", "residual"});
  double scale = 0.0;
  for (const auto& v : a) scale = std::max(scale, std::abs(v));
  std::vector<Complex> f(lambda.size());
  parallel_for(lambda.size(), [&](std::size_t j) { f[j] = interpolate_explicit(b.g, a, lambda[j], c.delta); }, 8);
  double max_res = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    const double res = std::abs(f[j] - a[j]) / scale;
    max_res = std::max(max_res, res);
    nodes.row({lambda[j].real(), lambda[j].imag(), a[j].real(), a[j].imag(), f[j].real(), f[j].imag(), res});
  }
  const auto grid = guard_grid(b.g, c.grid_radial, c.grid_angular, s.size() - 3, c.delta);
  auto values = ctx.csv("grid", {"re", "im", "value_re", "value_im"});
  std::vector<Complex> fg(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { fg[i] = interpolate_explicit(b.g, a, grid[i], c.delta); }, 8);
  for (std::size_t i = 0; i < grid.size(); ++i) values.row({grid[i].real(), grid[i].imag(), fg[i].real(), fg[i].imag()});
  const std::vector<std::vector<Complex>> data{a};
  const auto norms = basis_norms(
      s, [&](Complex z) { return interpolation_basis(b.g, z, 0.0); }, data,
      [&](std::size_t n) { return circle_points(s, n); });
  const double sol = std::sqrt(norms[0]);
  return {{"points", lambda.size()},
          {"max_residual", max_res},
          {"data_norm", 1.0},
          {"solution_norm", sol},
          {"ratio", sol},
          {"grid_points", grid.size()},
          {"build", build_report_json(b.report)}};
}

Json cmd_sampling_demo(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  const auto lambda = sequence_of(c, s);
  const auto b = build(c, lambda, s, GCase::sampling);
  std::vector<Complex> coeffs{1.0};
  if (c.test_function == "poly") {
    CounterRng rng(c.seed, 1);
    coeffs.resize(9);
    for (auto& v : coeffs) v = Complex(rng.normal(), rng.normal());
  } else if (c.test_function != "one") {
    throw ValidationError("test_function must be 'poly' or 'one'");
  }
  std::vector<Complex> samples(lambda.size());
  for (std::size_t j = 0; j < lambda.size(); ++j) samples[j] = poly_eval(coeffs, lambda[j]);
  const auto grid = guard_grid(b.g, c.grid_radial, c.grid_angular, s.size() - 3, c.delta);
  std::vector<Complex> rec(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { rec[i] = sampling_reconstruct(b.g, samples, grid[i], c.delta); }, 8);
  auto csv = ctx.csv("grid", {"re", "im", "true_re", "true_im", "rec_re", "rec_im", "rel_error"});
  double max_err = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Complex t = poly_eval(coeffs, grid[i]);
    const double e = std::abs(rec[i] - t) / std::max(std::abs(t), 1e-300);
    max_err = std::max(max_err, e);
    sq += e * e;
    csv.row({grid[i].real(), grid[i].imag(), t.real(), t.imag(), rec[i].real(), rec[i].imag(), e});
  }
  return {{"points", lambda.size()},
          {"test_function", c.test_function},
          {"grid_points", grid.size()},
          {"max_rel_error", max_err},
          {"rms_rel_error", grid.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(grid.size()))},
          {"build", build_report_json(b.report)}};
}

Json cmd_threshold_sweep(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto s = schedule_of(c);
  const KernelModel km = kernel_of(c, s);
  if (c.spacings.empty()) throw ValidationError("threshold-sweep needs at least one spacing");
  struct Row {
    double spacing = 0.0;
    std::size_t points = 0;
    double d_plus = 0.0;
    double d_minus = 0.0;
    double gram_min = 0.0;
    FrameLadder ladder;
    bool tail = false;
  };
  std::vector<Row> rows(c.spacings.size());
  // Each step is independent; rows are written by index so the output does
  // not depend on the worker schedule.
  parallel_for(
      rows.size(),
      [&](std::size_t i) {
        Row& r = rows[i];
        r.spacing = c.spacings[i];
        LatticeOptions lo;
        lo.max_circle = c.lattice_max_circle;
        const auto lambda = generate_circle_lattice(s, r.spacing, c.stride, lo);
        r.points = lambda.size();
        DensityOptions up = density_options(c);
        up.anchors = AnchorKind::points;
        DensityOptions low = density_options(c);
        low.anchors = AnchorKind::grid;
        r.d_plus = upper_density(lambda, s, up).d_plus_est;
        r.d_minus = lower_density(lambda, s, low).d_minus_est;
        LatticeOptions go = lo;
        go.max_circle = std::min(c.gram_max_circle, c.lattice_max_circle);
        const auto sub = generate_circle_lattice(s, r.spacing, c.stride, go);
        const auto ic = interpolation_certificate(sub, km);
        r.gram_min = ic.min_eig;
        r.ladder = frame_ladder(lambda, km, c.frame_d0, c.frame_degree, 0.05, 1);
        r.tail = ic.tail_flag || std::any_of(r.ladder.steps.begin(), r.ladder.steps.end(),
                                             [](const FrameBounds& f) { return f.tail_flag; });
      },
      1);
  auto csv = ctx.csv("", {"spacing", "d_plus_est", "d_minus_est", "gram_min_eig", "frame_A", "frame_B"});
  auto ladder_csv = ctx.csv("ladder", {"spacing", "degree", "frame_A", "frame_B"});
  Json steps = Json::array();
  for (const auto& r : rows) {
    const auto& last = r.ladder.steps.back();
    csv.row({r.spacing, r.d_plus, r.d_minus, r.gram_min, last.A, last.B});
    for (const auto& f : r.ladder.steps) ladder_csv.row({r.spacing, static_cast<double>(f.degree), f.A, f.B});
    ctx.flag(r.tail, "kernel tail bound exceeds tolerance in the sweep");
    steps.push_back({{"spacing", r.spacing},
                     {"points", r.points},
                     {"d_plus_est", r.d_plus},
                     {"d_minus_est", r.d_minus},
                     {"gram_min_eig", r.gram_min},
                     {"frame_A", last.A},
                     {"frame_B", last.B},
                     {"frame_last_change", r.ladder.last_change},
                     {"frame_plateau", r.ladder.plateau},
                     {"tail_flag", r.tail}});
  }
  return {{"steps", std::move(steps)}};
}

using Handler = Json (*)(Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"weight-info", cmd_weight_info},   {"radii", cmd_radii},
      {"kernel-diag", cmd_kernel_diag},   {"carleson-check", cmd_carleson_check},
      {"density", cmd_density},           {"classify", cmd_classify},
      {"construct-g", cmd_construct_g},   {"certify", cmd_certify},
      {"interp-demo", cmd_interp_demo},   {"sampling-demo", cmd_sampling_demo},
      {"threshold-sweep", cmd_threshold_sweep}};
  return h;
}

}  // namespace

void apply_json(ExperimentConfig& c, const Json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "weight") c.weight = field<std::string>(v, key);
    else if (key == "n_radii") c.n_radii = count_field(v, key);
    else if (key == "degree") c.degree = count_field(v, key);
    else if (key == "sequence") c.sequence = field<std::string>(v, key);
    else if (key == "generate") c.generate = field<std::string>(v, key);
    else if (key == "measure") c.measure = field<std::string>(v, key);
    else if (key == "measure_count") c.measure_count = count_field(v, key);
    else if (key == "m_min") c.m_min = count_field(v, key);
    else if (key == "m_max") c.m_max = count_field(v, key);
    else if (key == "include_self") c.include_self = field<bool>(v, key);
    else if (key == "m") c.m = v.is_null() ? std::nullopt : std::optional<std::size_t>(count_field(v, key));
    else if (key == "epsilon") c.epsilon = v.is_null() ? std::nullopt : std::optional<double>(field<double>(v, key));
    else if (key == "kind") c.kind = field<std::string>(v, key);
    else if (key == "seed") c.seed = field<std::uint64_t>(v, key);
    else if (key == "out") c.out = field<std::string>(v, key);
    else if (key == "grid_radial") c.grid_radial = count_field(v, key);
    else if (key == "grid_angular") c.grid_angular = count_field(v, key);
    else if (key == "delta") c.delta = field<double>(v, key);
    else if (key == "margin") c.margin = field<double>(v, key);
    else if (key == "spacings") c.spacings = field<std::vector<double>>(v, key);
    else if (key == "stride") c.stride = count_field(v, key);
    else if (key == "lattice_max_circle") c.lattice_max_circle = count_field(v, key);
    else if (key == "gram_max_circle") c.gram_max_circle = count_field(v, key);
    else if (key == "frame_degree") c.frame_degree = count_field(v, key);
    else if (key == "frame_d0") c.frame_d0 = count_field(v, key);
    else if (key == "data_vectors") c.data_vectors = count_field(v, key);
    else if (key == "test_function") c.test_function = field<std::string>(v, key);
    else if (key == "threads") c.threads = count_field(v, key);
    else if (key == "isa") c.isa = field<std::string>(v, key);
    else throw ValidationError("config: unknown field '" + key + "'");
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  ExperimentConfig c;
  apply_json(c, j);
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["weight"] = c.weight;
  j["n_radii"] = c.n_radii;
  j["degree"] = c.degree;
  j["sequence"] = c.sequence;
  j["generate"] = c.generate;
  j["measure"] = c.measure;
  j["measure_count"] = c.measure_count;
  j["m_min"] = c.m_min;
  j["m_max"] = c.m_max;
  j["include_self"] = c.include_self;
  j["m"] = c.m ? Json(*c.m) : Json(nullptr);
  j["epsilon"] = c.epsilon ? Json(*c.epsilon) : Json(nullptr);
  j["kind"] = c.kind;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["grid_radial"] = c.grid_radial;
  j["grid_angular"] = c.grid_angular;
  j["delta"] = c.delta;
  j["margin"] = c.margin;
  j["spacings"] = c.spacings;
  j["stride"] = c.stride;
  j["lattice_max_circle"] = c.lattice_max_circle;
  j["gram_max_circle"] = c.gram_max_circle;
  j["frame_degree"] = c.frame_degree;
  j["frame_d0"] = c.frame_d0;
  j["data_vectors"] = c.data_vectors;
  j["test_function"] = c.test_function;
  j["threads"] = c.threads;
  j["isa"] = c.isa;
  return j;
}

ExperimentConfig resolve(ExperimentConfig c) {
  const Weight w = make_weight(c.weight);
  if (c.n_radii == 0) c.n_radii = default_truncation(w);
  if (c.n_radii < 2) throw ValidationError("n_radii must be at least 2");
  const auto s = compute_radii(w, c.n_radii);
  if (c.degree == 0) {
    // Left at 0 when the default is not representable; commands that need a
    // kernel then ask for an explicit degree.
    try {
      c.degree = default_degree(s);
    } catch (const ValidationError&) {
    }
  }
  if (c.m_max == 0) c.m_max = default_m_max(s);
  if (c.lattice_max_circle == 0) c.lattice_max_circle = c.n_radii - 2;
  if (c.frame_degree == 0) c.frame_degree = std::min<std::size_t>(c.degree, 1024);
  if (c.frame_degree > c.degree) throw ValidationError("frame_degree exceeds degree");
  if (c.frame_d0 == 0 || c.frame_d0 > c.frame_degree) c.frame_d0 = std::min<std::size_t>(64, c.frame_degree);
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (c.isa == "auto") {
    c.isa = std::string(kernels::name(kernels::active().isa));
  } else if (c.isa == "scalar") {
    kernels::select(kernels::Isa::scalar);
  } else if (c.isa == "avx2") {
    kernels::select(kernels::Isa::avx2);
  } else {
    throw ValidationError("isa must be auto, scalar or avx2");
  }
  return c;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : handlers()) v.push_back(k);
    return v;
  }();
  return names;
}

int run(const std::string& subcommand, const ExperimentConfig& config) {
  const auto it = handlers().find(subcommand);
  if (it == handlers().end()) {
    std::cerr << "error: unknown subcommand '" << subcommand << "'\n";
    return 2;
  }
  try {
    Context ctx;
    ctx.cfg = resolve(config);
    ctx.name = subcommand;
    set_worker_count(static_cast<unsigned>(ctx.cfg.threads));
    std::filesystem::create_directories(ctx.cfg.out);
    Json result = it->second(ctx);
    Json summary;
    summary["schema_version"] = io::kSchemaVersion;
    summary["command"] = subcommand;
    summary["config"] = to_json(ctx.cfg);
    summary["result"] = std::move(result);
    summary["flagged"] = ctx.flagged;
    io::write_json(ctx.path("", ".json"), summary);
    if (ctx.flagged) {
      std::cerr << "numerical guard: " << ctx.flag_reason << '\n';
      return 3;
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalGuardError& e) {
    std::cerr << "numerical guard: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace bergman::cli
