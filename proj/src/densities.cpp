#include "bergman/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bergman/error.hpp"
#include "bergman/kernels.hpp"
#include "bergman/parallel.hpp"
#include "bergman/space.hpp"

namespace bergman {
namespace {

// Lattice points sit exactly on schedule circles, so membership is decided
// with a tolerance far below the annulus widths.
double circle_tol(const RadiiSchedule& s, std::size_t k) { return std::max(1e-15, 1e-9 * s.gap(k)); }

/// Points sorted by modulus, for prefix sums over radius cutoffs.
struct SortedPoints {
  std::vector<double> mod;
  std::vector<double> re;
  std::vector<double> im;

  explicit SortedPoints(const PointSequence& lambda) {
    const std::size_t n = lambda.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = std::abs(lambda[i]);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m[a] < m[b]; });
    mod.resize(n);
    re.resize(n);
    im.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      mod[i] = m[order[i]];
      re[i] = lambda[order[i]].real();
      im[i] = lambda[order[i]].imag();
    }
  }

  [[nodiscard]] std::size_t count_closed(const RadiiSchedule& s, std::size_t k) const {
    const double R = s.radius(k) + circle_tol(s, k);
    return static_cast<std::size_t>(std::upper_bound(mod.begin(), mod.end(), R) - mod.begin());
  }
  [[nodiscard]] std::size_t count_open(const RadiiSchedule& s, std::size_t k) const {
    const double R = s.radius(k) - circle_tol(s, k);
    return static_cast<std::size_t>(std::lower_bound(mod.begin(), mod.end(), R) - mod.begin());
  }
  [[nodiscard]] double segment(Complex z, std::size_t lo, std::size_t hi) const {
    if (hi <= lo) return 0.0;
    return kernels::active().one_minus_rho_sum(z.real(), z.imag(), re.data() + lo, im.data() + lo, hi - lo);
  }
};

/// Raw partial sums for m = 1..m_max at anchor z.
std::vector<double> anchor_sums(const SortedPoints& sp, const RadiiSchedule& s, Complex z, std::size_t n,
                                std::size_t m_max, bool closed) {
  std::vector<double> out(m_max);
  std::size_t pos = 0;
  double acc = 0.0;
  for (std::size_t m = 1; m <= m_max; ++m) {
    const std::size_t k = n + m;
    const std::size_t next = closed ? sp.count_closed(s, k) : sp.count_open(s, k);
    acc += sp.segment(z, pos, std::max(pos, next));
    pos = std::max(pos, next);
    out[m - 1] = acc;
  }
  return out;
}

void validate(const RadiiSchedule& s, const DensityOptions& opt) {
  if (opt.m_min < 1 || opt.m_min > opt.m_max) throw ValidationError("density m_range must satisfy 1 <= m_min <= m_max");
  if (opt.m_max > s.size()) throw ValidationError("density m_max exceeds the truncation N");
}

DensityReport summarize(std::vector<std::vector<double>> sums, const DensityOptions& opt, AnchorKind kind,
                        bool closed, std::size_t max_anchor, bool use_sup) {
  DensityReport rep;
  rep.m_min = opt.m_min;
  rep.m_max = opt.m_max;
  rep.anchor_kind = kind;
  rep.closed_cutoff = closed;
  rep.anchors_used = sums.size();
  rep.max_anchor_index = max_anchor;
  std::vector<double> sup_raw(opt.m_max, 0.0);
  std::vector<double> inf_raw(opt.m_max, sums.empty() ? 0.0 : std::numeric_limits<double>::infinity());
  for (const auto& row : sums) {
    for (std::size_t i = 0; i < opt.m_max; ++i) {
      sup_raw[i] = std::max(sup_raw[i], row[i]);
      inf_raw[i] = std::min(inf_raw[i], row[i]);
    }
  }
  for (std::size_t m = opt.m_min; m <= opt.m_max; ++m) {
    const double dm = static_cast<double>(m);
    rep.per_m.push_back({m, sup_raw[m - 1] / dm, inf_raw[m - 1] / dm});
  }
  const std::size_t lo = std::max(opt.m_min, (opt.m_max + 1) / 2);
  rep.d_plus_est = 0.0;
  rep.d_minus_est = std::numeric_limits<double>::infinity();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (const auto& row : rep.per_m) {
    if (row.m < lo) continue;
    rep.d_plus_est = std::max(rep.d_plus_est, row.sup_value);
    rep.d_minus_est = std::min(rep.d_minus_est, row.inf_value);
    const double x = static_cast<double>(row.m);
    const double y = use_sup ? row.sup_value : row.inf_value;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    cnt += 1.0;
  }
  const double den = cnt * sxx - sx * sx;
  rep.slope = den > 0.0 ? (cnt * sxy - sx * sy) / den : 0.0;
  const auto& raw = use_sup ? sup_raw : inf_raw;
  rep.increment_est = opt.m_max > lo ? (raw[opt.m_max - 1] - raw[lo - 1]) / static_cast<double>(opt.m_max - lo) : 0.0;
  return rep;
}

}  // namespace

std::size_t default_m_max(const RadiiSchedule& s) {
  const std::size_t N = s.size();
  return N >= 6 ? N - 4 : std::max<std::size_t>(1, N / 2);
}

double partial_sum(const PointSequence& lambda, Complex z, std::size_t m, const RadiiSchedule& s, bool closed) {
  const auto idx = s.annulus_index(z);
  if (idx.n + m > s.size()) throw ValidationError("partial_sum range n(z)+m exceeds N");
  const std::size_t k = idx.n + m;
  const double R = closed ? s.radius(k) + circle_tol(s, k) : s.radius(k) - circle_tol(s, k);
  double acc = 0.0;
  for (const auto& w : lambda.points()) {
    const double mw = std::abs(w);
    if (closed ? mw <= R : mw < R) acc += 1.0 - rho(z, w);
  }
  return acc;
}

DensityReport upper_density(const PointSequence& lambda, const RadiiSchedule& s, const DensityOptions& opt) {
  validate(s, opt);
  const std::size_t max_anchor = s.size() - opt.m_max;
  const SortedPoints sp(lambda);
  std::vector<Complex> anchors;
  std::vector<std::size_t> annulus;
  if (opt.anchors == AnchorKind::points) {
    if (lambda.empty()) throw ValidationError("upper density with point anchors needs a nonempty sequence");
    for (const auto& z : lambda.points()) {
      const auto idx = s.annulus_index(z);
      if (idx.n <= max_anchor) {
        anchors.push_back(z);
        annulus.push_back(idx.n);
      }
    }
    if (anchors.empty()) throw ValidationError("no sequence point satisfies n(lambda) <= N - m_max");
  } else {
    anchors = radial_grid(s, opt.grid_radial, opt.grid_angular, max_anchor);
    for (const auto& z : anchors) annulus.push_back(std::min(max_anchor, s.annulus_index(z).n));
  }
  std::vector<std::vector<double>> sums(anchors.size());
  parallel_for(anchors.size(), [&](std::size_t i) {
    sums[i] = anchor_sums(sp, s, anchors[i], annulus[i], opt.m_max, true);
    if (opt.anchors == AnchorKind::points && !opt.include_self) {
      for (auto& v : sums[i]) v -= 1.0;
    }
  }, 8);
  return summarize(std::move(sums), opt, opt.anchors, true, max_anchor, true);
}

DensityReport lower_density(const PointSequence& lambda, const RadiiSchedule& s, DensityOptions opt) {
  validate(s, opt);
  const std::size_t max_anchor = s.size() - opt.m_max;
  const SortedPoints sp(lambda);
  std::vector<Complex> anchors;
  std::vector<std::size_t> annulus;
  if (opt.anchors == AnchorKind::points) {
    for (const auto& z : lambda.points()) {
      const auto idx = s.annulus_index(z);
      if (idx.n <= max_anchor) {
        anchors.push_back(z);
        annulus.push_back(idx.n);
      }
    }
  } else {
    anchors = radial_grid(s, opt.grid_radial, opt.grid_angular, max_anchor);
    for (const auto& z : anchors) annulus.push_back(std::min(max_anchor, s.annulus_index(z).n));
  }
  std::vector<std::vector<double>> sums(anchors.size());
  parallel_for(anchors.size(), [&](std::size_t i) {
    sums[i] = anchor_sums(sp, s, anchors[i], annulus[i], opt.m_max, false);
    if (opt.anchors == AnchorKind::points && !opt.include_self) {
      for (auto& v : sums[i]) v -= 1.0;
    }
  }, 8);
  return summarize(std::move(sums), opt, opt.anchors, false, max_anchor, false);
}

Classification classify(const PointSequence& lambda, const RadiiSchedule& s, const ClassifyConfig& cfg) {
  Classification c;
  c.separation = lambda.separation();
  c.separated = lambda.separated();
  DensityOptions up = cfg.density;
  up.anchors = AnchorKind::points;
  DensityOptions low = cfg.density;
  low.anchors = AnchorKind::grid;
  if (lambda.empty()) {
    c.d_plus = 0.0;
  } else {
    c.upper = upper_density(lambda, s, up);
    c.d_plus = c.upper.d_plus_est;
  }
  c.lower = lower_density(lambda, s, low);
  c.d_minus = c.lower.d_minus_est;
  c.d_plus_finite = std::isfinite(c.d_plus);
  c.interp_candidate = c.separated && c.d_plus < kDensityThreshold - cfg.margin;
  c.sampling_candidate = c.separated && c.d_plus_finite && c.d_minus > kDensityThreshold + cfg.margin;
  return c;
}

}  // namespace bergman
