// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "bergman/carleson.hpp"
#include "bergman/certify.hpp"
#include "bergman/construction.hpp"
#include "bergman/densities.hpp"
#include "bergman/geometry.hpp"
#include "bergman/rng.hpp"
#include "bergman/space.hpp"
#include "bergman/weights.hpp"

using namespace bergman;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void note(Outcome& o, bool ok, const char* fmt, auto... args) {
  char buf[512];
  if constexpr (sizeof...(args) == 0) {
    std::snprintf(buf, sizeof buf, "%s", fmt);
  } else {
    std::snprintf(buf, sizeof buf, fmt, args...);
  }
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += buf;
  if (!ok) {
    o.pass = false;
    o.detail += " [x]";
  }
}

PointSequence lattice(const RadiiSchedule& s, double spacing, std::size_t last, std::size_t stride = 1) {
  return generate_circle_lattice(s, spacing, stride, {.max_points = 5'000'000, .max_circle = last, .min_circle = 1});
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * double(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = double(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------

Outcome ac1() {
  Outcome o;
  struct Case {
    const char* name;
    Weight w;
    std::function<double(std::size_t)> gap;
  };
  const Case cases[] = {
      {"constant", Weight::constant(), [](std::size_t n) { return std::ldexp(1.0, -int(n)); }},
      {"alpha(1/2)", Weight::standard_alpha(0.5), [](std::size_t n) { return std::ldexp(1.0, -2 * int(n)); }},
      {"loglog", Weight::loglog(), [](std::size_t n) { return std::exp(1.0 - std::ldexp(1.0, int(n))); }},
  };
  for (const auto& c : cases) {
    const std::size_t N = default_truncation(c.w);
    const auto s = compute_radii(c.w, N);
    double tail_err = 0.0, rad_err = 0.0;
    for (std::size_t n = 0; n <= N; ++n) {
      tail_err = std::max(tail_err, std::abs(c.w.tail_from_gap(s.gap(n)) - std::ldexp(1.0, -int(n))));
      // Relative in 1 - r, which is the stricter reading near the rim.
      rad_err = std::max(rad_err, std::abs(s.gap(n) - c.gap(n)) / c.gap(n));
      rad_err = std::max(rad_err, std::abs(s.radius(n) - (1.0 - c.gap(n))) / std::max(1e-300, 1.0 - c.gap(n)));
    }
    note(o, tail_err <= 1e-10 && rad_err <= 1e-9, "%s N=%zu tail_err=%.2e radius_rel_err=%.2e", c.name, N, tail_err,
         rad_err);
  }
  return o;
}

Outcome ac2() {
  Outcome o;
  const auto s = compute_radii(Weight::constant(), 14);
  const auto km = monomial_norms(s, 600);
  CounterRng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t deg = 1 + rng.below(100);
    std::vector<Complex> a(deg + 1);
    for (auto& c : a) c = {rng.normal(), rng.normal()};
    const Complex zeta = std::polar(s.radius(12) * std::sqrt(rng.uniform()), kTwoPi * rng.uniform());
    const Complex exact = poly_eval(a, zeta);
    const Complex ip = inner_product_poly(km, a, kernel_coefficients(km, zeta));
    worst = std::max(worst, std::abs(ip - exact) / std::abs(exact));
  }
  note(o, worst <= 1e-9, "50 polys deg<=100, |zeta|<=r_12, D=600: max rel err %.2e", worst);
  return o;
}

Outcome ac3() {
  Outcome o;
  {
    const auto s = compute_radii(Weight::constant(), 14);
    const auto km = monomial_norms(s, default_degree(s));
    const auto st = diag_ratio_stats(km, radial_grid(s, 64, 32, 11));
    note(o, st.spread() <= 20.0 && !st.tail_flag, "constant N=14 to r_11: spread %.3f (tail %d)", st.spread(),
         int(st.tail_flag));
  }
  {
    // r_3 is as far out as a loglog kernel series of practical length reaches.
    const auto s = compute_radii(Weight::loglog(), 6);
    const auto km = monomial_norms(s, 20000);
    const auto st = diag_ratio_stats(km, radial_grid(s, 64, 32, 3));
    note(o, st.spread() <= 20.0 && !st.tail_flag, "loglog N=6 to r_3: spread %.3f (tail %d)", st.spread(),
         int(st.tail_flag));
  }
  return o;
}

Outcome ac4() {
  Outcome o;
  const auto s = compute_radii(Weight::constant(), 14);
  const auto k300 = monomial_norms(s, 300);
  const auto k600 = monomial_norms(s, 600);
  std::vector<double> r300, r600;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto mu = random_measure(s, 40, 0, 8, seed);
    const double t1 = theorem1_profile(mu, s).sup;
    r300.push_back(embedding_constant_direct(mu, k300).value / t1);
    r600.push_back(embedding_constant_direct(mu, k600).value / t1);
  }
  const auto [lo3, hi3] = std::minmax_element(r300.begin(), r300.end());
  const auto [lo6, hi6] = std::minmax_element(r600.begin(), r600.end());
  const double spread3 = *hi3 / *lo3, spread6 = *hi6 / *lo6;
  note(o, *lo3 >= 0.01 && *hi3 <= 100.0, "D=300 ratio in [%.3f, %.3f]", *lo3, *hi3);
  note(o, spread6 <= 1.1 * spread3, "spread %.3f (D=300) -> %.3f (D=600)", spread3, spread6);
  return o;
}

Outcome ac5() {
  Outcome o;
  CounterRng rng(55);
  double worst = 0.0;
  int flagged = 0;
  for (int c = 0; c < 50; ++c) {
    const double r = 0.3 + 0.65 * rng.uniform();
    const std::size_t count = 1 + rng.below(30);
    std::vector<Complex> zeros;
    while (zeros.size() < count) {
      const Complex a = std::polar(0.999 * std::sqrt(rng.uniform()), kTwoPi * rng.uniform());
      const double am = std::abs(a);
      if (std::abs(am - r) / (1.0 - am * r) < 0.05) continue;
      zeros.push_back(a);
    }
    const auto j = jensen_check(PointSequence(zeros), r, 16384);
    worst = std::max(worst, j.residual);
    flagged += j.divergence_flag ? 1 : 0;
  }
  note(o, worst <= 1e-8 && flagged == 0, "50 configurations: max residual %.2e, flagged %d", worst, flagged);
  return o;
}

Outcome ac6() {
  Outcome o;
  const std::size_t N = 16, last = 14, gram_last = 8;
  const auto s = compute_radii(Weight::constant(), N);
  const auto km = monomial_norms(s, default_degree(s));
  std::vector<double> spacing;
  for (int i = 0; i < 10; ++i) spacing.push_back(100.0 * std::pow(4.4 / 100.0, i / 9.0));

  DensityOptions dopt{.m_min = 1, .m_max = default_m_max(s), .include_self = false, .grid_radial = 64,
                      .grid_angular = 64};
  std::vector<double> dplus, dminus, gmin, idx;
  std::vector<FrameLadder> ladders;
  std::printf("  %8s %8s %8s %12s %12s %12s %9s %s\n", "spacing", "d_plus", "d_minus", "gram_min", "frame_A",
              "frame_B", "change", "plateau");
  for (std::size_t i = 0; i < spacing.size(); ++i) {
    const auto lam = lattice(s, spacing[i], last);
    const auto sub = lattice(s, spacing[i], gram_last);
    dplus.push_back(upper_density(lam, s, dopt).d_plus_est);
    dminus.push_back(lower_density(lam, s, dopt).d_minus_est);
    gmin.push_back(hermitian_extremes(normalized_gram(sub, km).matrix).min);
    ladders.push_back(frame_ladder(lam, km, 64, 1024, 0.05, 1));
    idx.push_back(double(i));
    const auto& f = ladders.back().steps.back();
    std::printf("  %8.2f %8.4f %8.4f %12.4e %12.4e %12.4e %8.2f%% %d\n", spacing[i], dplus.back(), dminus.back(),
                gmin.back(), f.A, f.B, 100.0 * ladders.back().last_change, int(ladders.back().plateau));
  }
  const auto [dlo, dhi] = std::minmax_element(dplus.begin(), dplus.end());
  note(o, *dlo <= 0.15 && *dhi >= 0.55, "d_plus spans [%.3f, %.3f]", *dlo, *dhi);
  const double rho = spearman(idx, gmin);
  note(o, rho <= -0.9, "gram_min_eig Spearman %.3f", rho);
  bool low_ok = true, high_ok = true;
  for (std::size_t i = 0; i < spacing.size(); ++i) {
    if (dminus[i] < 0.35 && ladders[i].plateau) low_ok = false;
    if (dminus[i] >= 0.45 && !ladders[i].plateau) {
      high_ok = false;
      note(o, false, "no plateau at d_minus %.3f (change %.1f%%)", dminus[i], 100.0 * ladders[i].last_change);
    }
  }
  note(o, low_ok, "no plateau below d_minus 0.35");
  note(o, high_ok, "plateau for every d_minus >= 0.45");
  return o;
}

struct Ac7Case {
  const char* name;
  PointSequence lambda;
  BuildOptions opt;
};

Outcome ac7() {
  Outcome o;
  const std::size_t N = 12;
  const auto s = compute_radii(Weight::constant(), N);
  DensityOptions dens{.m_min = 1, .m_max = default_m_max(s), .include_self = false, .grid_radial = 64,
                      .grid_angular = 64};

  std::vector<Ac7Case> cases;
  {
    Ac7Case c{"sparse/I", lattice(s, 64.0, N - 2), {}};
    c.opt.kind = GCase::interpolation;
    c.opt.density = dens;
    const double dp = upper_density(c.lambda, s, dens).d_plus_est;
    note(o, dp <= 0.2, "sparse d_plus %.3f", dp);
    cases.push_back(std::move(c));
  }
  {
    Ac7Case c{"dense/S", lattice(s, 6.0, N), {}};
    c.opt.kind = GCase::sampling;
    c.opt.m = 3;
    c.opt.density = dens;
    const double dm = lower_density(c.lambda, s, dens).d_minus_est;
    note(o, dm >= 0.45, "dense d_minus %.3f", dm);
    c.opt.d_minus = dm;
    cases.push_back(std::move(c));
  }
  for (auto& c : cases) {
    double spread[2], redis[2];
    for (std::size_t q : {1u, 2u}) {
      c.opt.quad_factor = q;
      BuildReport rep;
      const auto g = build_G(c.lambda, s, c.opt, &rep);
      spread[q - 1] = verify_G(g, guard_grid(g, 64, 64, N - 2, 0.05), 0.05).spread();
      const auto grid = redistribution_grid(c.lambda, s, rep.m, 48, 64, N - 2, 0.05);
      redis[q - 1] = redistribution_error(c.lambda, s, rep.m, grid, 0.05, q).C;
      if (q == 1) note(o, true, "%s m=%zu eps=%.3f", c.name, rep.m, rep.epsilon);
    }
    const double ds = std::abs(spread[1] - spread[0]) / spread[0];
    const double dr = std::abs(redis[1] - redis[0]) / redis[0];
    note(o, spread[0] <= 6.0 && spread[1] <= 6.0, "%s spread %.3f / %.3f", c.name, spread[0], spread[1]);
    note(o, ds < 0.10, "%s spread change %.2f%%", c.name, 100 * ds);
    note(o, dr < 0.05, "%s redistribution C %.4f / %.4f (%.2f%%)", c.name, redis[0], redis[1], 100 * dr);
  }
  return o;
}

Outcome ac8() {
  Outcome o;
  const std::size_t N = 12;
  const auto s = compute_radii(Weight::constant(), N);
  const auto full = lattice(s, 64.0, 10);
  std::vector<Complex> pts(full.points().begin(), full.points().end());
  std::stable_sort(pts.begin(), pts.end(), [](Complex a, Complex b) { return std::abs(a) < std::abs(b); });
  pts.resize(std::min<std::size_t>(150, pts.size()));
  const PointSequence lam(pts);
  const std::size_t n = lam.size();

  BuildOptions opt;
  opt.kind = GCase::interpolation;
  opt.density.include_self = false;
  const auto g = build_G(lam, s, opt);

  // Row i holds b_l(lambda_i) for every l: one-hot data e_l is reproduced iff this is the identity.
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = interpolation_basis(g, lam[i], 0.0);
    for (std::size_t l = 0; l < n; ++l) worst = std::max(worst, std::abs(b[l] - (l == i ? 1.0 : 0.0)));
  }
  note(o, n == 150 && worst <= 1e-6, "%zu nodes, max one-hot residual %.2e", n, worst);

  const auto km = monomial_norms(s, default_degree(s));
  CounterRng rng(808);
  std::vector<std::vector<Complex>> data(20, std::vector<Complex>(n));
  std::vector<double> dnorm(20);
  for (std::size_t v = 0; v < 20; ++v) {
    for (auto& a : data[v]) a = {rng.normal(), rng.normal()};
    dnorm[v] = std::sqrt(data_norm(lam, km, data[v]));
  }
  const auto norms = basis_norms(
      s, [&](Complex z) { return interpolation_basis(g, z, 0.0); }, data,
      [&](std::size_t k) { return std::max<std::size_t>(256, std::size_t(std::ceil(16.0 / s.gap(k)))); });
  double lo = 1e300, hi = 0.0;
  for (std::size_t v = 0; v < 20; ++v) {
    const double ratio = std::sqrt(norms[v]) / dnorm[v];
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  note(o, std::isfinite(hi) && hi / lo < 10.0, "solution/data norm in [%.3f, %.3f], variation %.2fx", lo, hi, hi / lo);
  return o;
}

Outcome ac9() {
  Outcome o;
  const auto s = compute_radii(Weight::constant(), 10);
  const auto km = monomial_norms(s, default_degree(s));
  CounterRng rng(99);
  std::vector<Complex> pts;
  {
    const auto base = lattice(s, 8.0, 6);
    pts.assign(base.points().begin(), base.points().end());
  }
  const std::size_t D = 64;
  auto fb = frame_bounds(PointSequence(pts), km, D);
  double worst_a = 1e300, worst_b = 1e300;  // smallest increments seen
  for (int step = 0; step < 20; ++step) {
    pts.push_back(std::polar(s.radius(8) * std::sqrt(rng.uniform()), kTwoPi * rng.uniform()));
    const auto next = frame_bounds(PointSequence(pts), km, D);
    worst_a = std::min(worst_a, next.A - fb.A);
    worst_b = std::min(worst_b, next.B - fb.B);
    fb = next;
  }
  note(o, worst_a >= -1e-10 && worst_b >= -1e-10, "20 additions: smallest dA %.2e, smallest dB %.2e", worst_a, worst_b);

  const auto lam = lattice(s, 6.0, 9);
  const auto anchors = radial_grid(s, 16, 32, 6);  // n(z) + m stays within N
  std::size_t violations = 0, checks = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < lam.size(); ++i)
      if (rng.uniform() < 0.7) keep.push_back(i);
    const auto sub = lam.subset(keep);
    for (std::size_t a = 0; a < anchors.size(); a += 7) {
      for (std::size_t m : {1u, 2u, 4u}) {
        for (bool closed : {true, false}) {
          ++checks;
          if (partial_sum(sub, anchors[a], m, s, closed) > partial_sum(lam, anchors[a], m, s, closed) + 1e-12)
            ++violations;
        }
      }
    }
  }
  note(o, violations == 0, "partial sums under removal: %zu/%zu violations", violations, checks);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    double limit_s;
    Outcome (*run)();
  };
  const Criterion all[] = {{"AC1", 1, ac1},   {"AC2", 10, ac2},  {"AC3", 30, ac3},   {"AC4", 120, ac4}, {"AC5", 5, ac5},
                           {"AC6", 600, ac6}, {"AC7", 300, ac7}, {"AC8", 300, ac8}, {"AC9", 60, ac9}};
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    note(o, secs < c.limit_s, "%.1f s (limit %.0f s)", secs, c.limit_s);
    std::printf("%s %s  %s\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
