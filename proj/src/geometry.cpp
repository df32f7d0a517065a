#include "bergman/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bergman/error.hpp"
#include "bergman/kernels.hpp"

namespace bergman {
namespace {

void require_disk(Complex z, const char* what) {
  if (!(std::norm(z) < 1.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw ValidationError(std::string(what) + ": point outside the open unit disk");
  }
}

inline double rho_unchecked(Complex z, Complex w) {
  return std::abs(z - w) / std::abs(1.0 - std::conj(w) * z);
}

double brute_separation(std::span<const Complex> pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, rho_unchecked(pts[i], pts[j]));
  }
  return best;
}

}  // namespace

double rho(Complex z, Complex w) {
  require_disk(z, "rho");
  require_disk(w, "rho");
  return rho_unchecked(z, w);
}

Complex mobius(Complex a, Complex z) {
  require_disk(a, "mobius");
  return (a - z) / (1.0 - std::conj(a) * z);
}

PointSequence::PointSequence() : cache_(std::make_shared<Cache>()) {}

PointSequence::PointSequence(std::vector<Complex> points, std::string origin, double delta_sep)
    : points_(std::move(points)), origin_(std::move(origin)), delta_sep_(delta_sep),
      cache_(std::make_shared<Cache>()) {
  if (!(delta_sep_ > 0.0 && delta_sep_ < 1.0)) throw ValidationError("delta_sep must be in (0,1)");
  for (const auto& z : points_) require_disk(z, "PointSequence");
  std::vector<Complex> sorted = points_;
  std::sort(sorted.begin(), sorted.end(), [](Complex a, Complex b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("PointSequence points must be pairwise distinct");
  }
  re_.resize(points_.size());
  im_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    re_[i] = points_[i].real();
    im_[i] = points_[i].imag();
  }
}

double PointSequence::separation() const {
  std::call_once(cache_->once, [this] { cache_->separation = compute_separation(points_); });
  return cache_->separation;
}

PointSequence PointSequence::rotated(double angle) const {
  const Complex u = std::polar(1.0, angle);
  std::vector<Complex> pts(points_.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = points_[i] * u;
  return PointSequence(std::move(pts), origin_ + "+rotated", delta_sep_);
}

PointSequence PointSequence::merged(const PointSequence& other) const {
  std::vector<Complex> pts = points_;
  pts.insert(pts.end(), other.points_.begin(), other.points_.end());
  return PointSequence(std::move(pts), origin_ + "+" + other.origin_, delta_sep_);
}

PointSequence PointSequence::subset(std::span<const std::size_t> indices) const {
  std::vector<Complex> pts;
  pts.reserve(indices.size());
  for (auto i : indices) pts.push_back(points_.at(i));
  return PointSequence(std::move(pts), origin_ + "+subset", delta_sep_);
}

// If rho(z, w) < 1/2 then (1-|w|)/(1-|z|) lies in [1/6, 6] and |z - w| <= 2(1-|z|).
// Points are bucketed by dyadic level of 1 - |z| and sorted by angle within a
// level; a pair closer than 1/2 is then found among levels differing by at
// most three, inside an angular window of half-width pi * 2(1-|z|).
double compute_separation(std::span<const Complex> pts) {
  const std::size_t n = pts.size();
  if (n < 2) return std::numeric_limits<double>::infinity();
  if (n <= 3000) return brute_separation(pts);

  constexpr double kBeta = 0.5;
  auto level_of = [](Complex z) {
    const double gap = 1.0 - std::abs(z);
    return gap >= 0.5 ? 0 : static_cast<int>(std::floor(-std::log2(gap)));
  };
  int max_level = 0;
  std::vector<int> level(n);
  for (std::size_t i = 0; i < n; ++i) {
    level[i] = level_of(pts[i]);
    max_level = std::max(max_level, level[i]);
  }
  struct Entry {
    double angle;
    std::size_t index;
  };
  std::vector<std::vector<Entry>> by_level(static_cast<std::size_t>(max_level) + 1);
  for (std::size_t i = 0; i < n; ++i) {
    by_level[static_cast<std::size_t>(level[i])].push_back({std::arg(pts[i]), i});
  }
  for (auto& v : by_level) {
    std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) { return a.angle < b.angle; });
  }
  double best = std::numeric_limits<double>::infinity();
  // Level 0 points pair only with levels 0..3; scan those exhaustively.
  std::vector<std::size_t> inner;
  for (int L = 0; L <= std::min(3, max_level); ++L) {
    for (const auto& e : by_level[static_cast<std::size_t>(L)]) inner.push_back(e.index);
  }
  for (const auto& e : by_level[0]) {
    for (auto j : inner) {
      if (j != e.index) best = std::min(best, rho_unchecked(pts[e.index], pts[j]));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int L = level[i];
    if (L == 0) continue;
    const double gap = 1.0 - std::abs(pts[i]);
    const double window = std::min(kPi, kPi * 2.0 * gap * (1.0 + 1e-9));
    const double theta = std::arg(pts[i]);
    for (int Lp = std::max(1, L - 3); Lp <= std::min(max_level, L + 3); ++Lp) {
      const auto& v = by_level[static_cast<std::size_t>(Lp)];
      if (v.empty()) continue;
      auto scan = [&](double lo, double hi) {
        auto it = std::lower_bound(v.begin(), v.end(), lo,
                                   [](const Entry& a, double x) { return a.angle < x; });
        for (; it != v.end() && it->angle <= hi; ++it) {
          if (it->index != i) best = std::min(best, rho_unchecked(pts[i], pts[it->index]));
        }
      };
      if (window >= kPi) {
        scan(-kPi - 1.0, kPi + 1.0);
        continue;
      }
      const double lo = theta - window;
      const double hi = theta + window;
      scan(std::max(lo, -kPi - 1.0), std::min(hi, kPi + 1.0));
      if (lo < -kPi) scan(lo + kTwoPi, kPi + 1.0);
      if (hi > kPi) scan(-kPi - 1.0, hi - kTwoPi);
    }
  }
  if (best < kBeta) return best;
  return brute_separation(pts);
}

double blaschke_log(const PointSequence& zeros, Complex z) {
  require_disk(z, "blaschke_log");
  if (zeros.empty()) return 0.0;
  return kernels::active().log_rho_sum(z.real(), z.imag(), zeros.re().data(), zeros.im().data(),
                                       zeros.size());
}

JensenResult jensen_check(const PointSequence& zeros, double r, std::size_t quad_points) {
  if (!(r > 0.0 && r < 1.0)) throw ValidationError("jensen_check radius must be in (0,1)");
  if (quad_points < 1) throw ValidationError("jensen_check needs quad_points >= 1");
  JensenResult out;
  for (const auto& z : zeros.points()) {
    const double m = std::abs(z);
    out.closed_form += std::log(std::max(r, m));
    if (std::abs(m - r) < 1e-6) out.divergence_flag = true;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < quad_points; ++k) {
    const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(quad_points);
    sum += blaschke_log(zeros, std::polar(r, t));
  }
  out.quadrature_mean = sum / static_cast<double>(quad_points);
  out.residual = std::abs(out.quadrature_mean - out.closed_form);
  return out;
}

bool in_carleson_square(Complex zeta, Complex z) {
  require_disk(zeta, "in_carleson_square");
  require_disk(z, "in_carleson_square");
  const double s = std::abs(zeta);
  if (s == 0.0) throw ValidationError("Carleson square anchor must be nonzero");
  const double m = std::abs(z);
  if (!(m > s)) return false;
  return std::abs(std::arg(z * std::conj(zeta))) < 1.0 - s;
}

std::size_t lattice_circle_count(const RadiiSchedule& s, std::size_t n, double spacing) {
  const double g = s.gap(n);
  const double k = std::round(kTwoPi * (1.0 - g) / (spacing * g));
  return k < 1.0 ? 1 : static_cast<std::size_t>(k);
}

PointSequence generate_circle_lattice(const RadiiSchedule& s, double spacing, std::size_t stride,
                                      const LatticeOptions& opt) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ValidationError("lattice spacing must be > 0");
  if (stride < 1) throw ValidationError("lattice stride must be >= 1");
  const std::size_t last = std::min(opt.max_circle, s.size());
  std::size_t total = 0;
  for (std::size_t n = opt.min_circle; n <= last; ++n) {
    if (n % stride != 0) continue;
    const double g = s.gap(n);
    const double k = kTwoPi * (1.0 - g) / (spacing * g);
    if (k > static_cast<double>(opt.max_points)) throw ValidationError("lattice exceeds point cap");
    total += lattice_circle_count(s, n, spacing);
    if (total > opt.max_points) throw ValidationError("lattice exceeds point cap");
  }
  std::vector<Complex> pts;
  pts.reserve(total);
  for (std::size_t n = opt.min_circle; n <= last; ++n) {
    if (n % stride != 0) continue;
    const double r = s.radius(n);
    if (!(r < 1.0)) throw ValidationError("lattice circle not representable (r_n rounds to 1)");
    const std::size_t K = lattice_circle_count(s, n, spacing);
    const double phase = opt.phase_offset + kGoldenAngle * static_cast<double>(n);
    for (std::size_t k = 0; k < K; ++k) {
      pts.push_back(std::polar(r, phase + kTwoPi * static_cast<double>(k) / static_cast<double>(K)));
    }
  }
  return PointSequence(std::move(pts), "lattice(spacing=" + std::to_string(spacing) +
                                           ",stride=" + std::to_string(stride) + ")",
                       opt.delta_sep);
}

}  // namespace bergman
