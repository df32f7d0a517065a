#include "bergman/construction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include "bergman/error.hpp"
#include "bergman/kernels.hpp"
#include "bergman/parallel.hpp"
#include "bergman/rng.hpp"
#include "bergman/space.hpp"

namespace bergman {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double reduce_angle(double a) { return std::remainder(a, kTwoPi); }

double gap_of(Complex z) {
  const double n2 = std::norm(z);
  return (1.0 - n2) / (1.0 + std::sqrt(n2));
}

/// rho between the circles through moduli a and b, which bounds rho from below.
double rho_radial(double a, double b) {
  const double ga = 1.0 - a;
  const double gb = 1.0 - b;
  const double den = ga + gb - ga * gb;
  return den > 0.0 ? std::abs(a - b) / den : 0.0;
}

/// log rho(z, w), accurate when rho is close to 1.
double log_rho(Complex z, Complex w) {
  const double d2 = std::norm(z - w);
  const double q2 = std::norm(1.0 - std::conj(w) * z);
  if (d2 == 0.0) return -kInf;
  const double omr2 = (1.0 - std::norm(z)) * (1.0 - std::norm(w)) / q2;
  return omr2 < 0.5 ? 0.5 * std::log1p(-omr2) : 0.5 * std::log(d2 / q2);
}

/// log|1 - w| for w = exp(lmod + i ang), lmod <= 0.
double log_abs_one_minus(double lmod, double ang) {
  if (lmod < -745.0) return 0.0;
  const Complex w = std::polar(std::exp(lmod), ang);
  return std::log(std::abs(1.0 - w));
}

/// log((z^K - c^K) / (r^K (1 - (conj(c) z)^K))) with c = r e^{i phi}: the ring
/// Blaschke product over r^K. The denominator is zero-free and harmonic in
/// log-modulus; it cancels the ripple (r/|z|)^K that the bare factor leaves
/// far outside the ring. Imaginary part reduced mod 2 pi.
Complex log_circle_factor(Complex z, double r, std::size_t K, double phi) {
  const double k = static_cast<double>(K);
  const double az = std::abs(z);
  if (az == 0.0) return {0.0, reduce_angle(k * phi + kPi)};
  const double th = std::arg(z);
  const Complex outer = std::polar(std::exp(k * (std::log(r) + std::log(az))), reduce_angle(k * (th - phi)));
  const Complex lden = std::log(1.0 - outer);
  if (az >= r) {
    const Complex w = std::polar(std::exp(k * std::log(r / az)), reduce_angle(k * (phi - th)));
    const Complex l1 = std::log(1.0 - w);
    return {k * std::log(az / r) + l1.real() - lden.real(), reduce_angle(k * th + l1.imag() - lden.imag())};
  }
  const Complex w = std::polar(std::exp(k * std::log(az / r)), reduce_angle(k * (th - phi)));
  const Complex l1 = std::log(1.0 - w);
  return {l1.real() - lden.real(), reduce_angle(k * phi + kPi + l1.imag() - lden.imag())};
}

double log_abs_circle_factor(Complex z, double r, std::size_t K, double phi) {
  const double k = static_cast<double>(K);
  const double az = std::abs(z);
  if (az == 0.0) return 0.0;
  const double th = std::arg(z);
  const double den = log_abs_one_minus(k * (std::log(r) + std::log(az)), k * (th - phi));
  if (az >= r) return k * std::log(az / r) + log_abs_one_minus(k * std::log(r / az), k * (phi - th)) - den;
  return log_abs_one_minus(k * std::log(az / r), k * (th - phi)) - den;
}

/// rho from z to the nearest of K equally spaced points r e^{i(phi + 2 pi k/K)}.
double rho_to_atoms(Complex z, double r, std::size_t K, double phi) {
  if (K == 0) return 1.0;
  const double step = kTwoPi / static_cast<double>(K);
  const double t = std::arg(z) - phi;
  const double k0 = std::round(t / step);
  double best = 1.0;
  for (double dk = -1.0; dk <= 1.0; dk += 1.0) best = std::min(best, rho(z, std::polar(r, phi + (k0 + dk) * step)));
  return best;
}

/// Nearest-point search over moduli-sorted points.
double nearest_rho_sorted(std::span<const double> mod, std::span<const double> re, std::span<const double> im,
                          Complex z) {
  if (mod.empty()) return 1.0;
  const double az = std::abs(z);
  const auto pos = static_cast<std::ptrdiff_t>(std::lower_bound(mod.begin(), mod.end(), az) - mod.begin());
  const auto n = static_cast<std::ptrdiff_t>(mod.size());
  double best = 1.0;
  for (std::ptrdiff_t i = pos; i < n; ++i) {
    if (rho_radial(az, mod[i]) >= best) break;
    best = std::min(best, rho(z, {re[i], im[i]}));
  }
  for (std::ptrdiff_t i = pos - 1; i >= 0; --i) {
    if (rho_radial(az, mod[i]) >= best) break;
    best = std::min(best, rho(z, {re[i], im[i]}));
  }
  return best;
}

std::size_t block_count(const RadiiSchedule& s, std::size_t m) { return m == 0 ? 0 : s.size() / m; }

}  // namespace

BlockedSequence::BlockedSequence(const PointSequence& lambda, const RadiiSchedule& s) {
  const std::size_t n = lambda.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> mod(n);
  for (std::size_t i = 0; i < n; ++i) mod[i] = std::abs(lambda[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mod[a] < mod[b]; });
  re_.resize(n);
  im_.resize(n);
  const std::size_t N = s.size();
  annulus_start_.assign(N + 2, n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex p = lambda[order[i]];
    re_[i] = p.real();
    im_[i] = p.imag();
    const std::size_t a = s.annulus_index(mod[order[i]]).n;
    while (next <= a) annulus_start_[next++] = i;
  }
}

BlockRange BlockedSequence::annuli(std::size_t n_lo, std::size_t n_hi) const {
  const std::size_t N = annulus_start_.size() - 2;
  if (n_lo > N) return {size(), size()};
  n_hi = std::min(n_hi, N);
  if (n_hi < n_lo) return {annulus_start_[n_lo], annulus_start_[n_lo]};
  return {annulus_start_[n_lo], annulus_start_[n_hi + 1]};
}

double BlockedSequence::log_rho_sum(BlockRange r, Complex z) const {
  if (r.end <= r.begin) return 0.0;
  return kernels::active().log_rho_sum(z.real(), z.imag(), re_.data() + r.begin, im_.data() + r.begin,
                                       r.end - r.begin);
}

double block_potential_U(const PointSequence& lambda, const RadiiSchedule& s, std::size_t j, std::size_t m,
                         Complex z) {
  if (m < 1) throw ValidationError("block size m must be >= 1");
  const BlockedSequence bs(lambda, s);
  return bs.log_rho_sum(bs.block(j, m), z);
}

double trapezoid_log_rho_mean(Complex x, std::size_t M, Complex a) {
  const double r = std::abs(x);
  const double Md = static_cast<double>(M);
  const double aa = std::abs(a);
  const double tx = std::arg(x);
  // prod_k (a - x w^k) = a^M - x^M and prod_k (1 - conj(a) x w^k) = 1 - (conj(a) x)^M.
  double num = 0.0;
  if (aa == 0.0) {
    num = Md * std::log(r);
  } else if (aa >= r) {
    num = Md * std::log(aa) + log_abs_one_minus(Md * std::log(r / aa), Md * (tx - std::arg(a)));
  } else {
    num = Md * std::log(r) + log_abs_one_minus(Md * std::log(aa / r), Md * (std::arg(a) - tx));
  }
  double den = 0.0;
  if (aa > 0.0) {
    const double lmod = Md * (std::log1p(-gap_of(a)) + std::log(r));
    den = log_abs_one_minus(lmod, Md * (tx - std::arg(a)));
  }
  return (num - den) / Md;
}

CircleSampler::CircleSampler(std::span<const Complex> zeros, double r, std::size_t M, double theta0)
    : r_(r), theta0_(theta0), zeros_(zeros.begin(), zeros.end()) {
  if (!(r > 0.0 && r < 1.0)) throw ValidationError("sampler circle radius must lie in (0, 1)");
  if (M < 8) throw ValidationError("sampler needs at least 8 nodes");
  std::vector<double> re(zeros.size());
  std::vector<double> im(zeros.size());
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    re[i] = zeros[i].real();
    im[i] = zeros[i].imag();
  }
  samples_.resize(M);
  const auto& k = kernels::active();
  parallel_for(M, [&](std::size_t i) {
    const Complex x = std::polar(r, theta0 + kTwoPi * static_cast<double>(i) / static_cast<double>(M));
    samples_[i] = zeros.empty() ? 0.0 : k.log_rho_sum(x.real(), x.imag(), re.data(), im.data(), zeros.size());
  });
  for (double v : samples_) {
    if (!std::isfinite(v)) throw NumericalGuardError("quadrature node coincides with a zero; change theta0");
  }
  const Complex x0 = std::polar(r, theta0);
  zero_errors_.resize(zeros.size());
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    const double exact = std::log(std::max(r, std::abs(zeros[i])));
    zero_errors_[i] = kTwoPi * (exact - trapezoid_log_rho_mean(x0, M, zeros[i]));
  }
}

CircleSampler::CircleSampler(const std::function<double(Complex)>& u, double r, std::size_t M, double theta0)
    : r_(r), theta0_(theta0), fn_(u) {
  if (!(r > 0.0 && r < 1.0)) throw ValidationError("sampler circle radius must lie in (0, 1)");
  if (M < 8) throw ValidationError("sampler needs at least 8 nodes");
  samples_.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    samples_[i] = u(std::polar(r, theta0 + kTwoPi * static_cast<double>(i) / static_cast<double>(M)));
  }
}

double CircleSampler::value_at(double t) const {
  const Complex x = std::polar(r_, t);
  if (fn_) return fn_(x);
  double acc = 0.0;
  for (const auto& a : zeros_) acc += log_rho(x, a);
  return acc;
}

double CircleSampler::smooth_value_at(double t) const {
  // A zero of U within one node of t makes the direct value meaningless for
  // the correction term; fall back to the bracketing samples.
  const std::size_t M = samples_.size();
  const double h = kTwoPi / static_cast<double>(M);
  bool near_zero = false;
  for (const auto& a : zeros_) {
    if (std::abs(reduce_angle(std::arg(a) - t)) < h && std::abs(std::abs(a) - r_) < h * r_) {
      near_zero = true;
      break;
    }
  }
  if (!near_zero) return value_at(t);
  const double u = reduce_angle(t - theta0_) / h;
  const double fl = std::floor(u);
  const auto i0 = static_cast<std::size_t>(((static_cast<long long>(fl) % static_cast<long long>(M)) + M) % M);
  const std::size_t i1 = (i0 + 1) % M;
  return samples_[i0] + (u - fl) * (samples_[i1] - samples_[i0]);
}

double CircleSampler::integrate_against_log_rho(Complex z) const {
  const std::size_t M = samples_.size();
  const double h = kTwoPi / static_cast<double>(M);
  double acc = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    if (samples_[i] == 0.0) continue;
    acc += log_rho(z, std::polar(r_, theta0_ + h * static_cast<double>(i))) * samples_[i];
  }
  acc *= h;
  // Log singularities of U at its zeros: the trapezoid error of the pure log
  // part is known exactly, and F is smooth there.
  for (std::size_t i = 0; i < zeros_.size(); ++i) {
    if (std::abs(zero_errors_[i]) < 1e-17) continue;
    acc += log_rho(z, std::polar(r_, std::arg(zeros_[i]))) * zero_errors_[i];
  }
  // Same for the singularity of F at z.
  const double ez = kTwoPi * (std::log(std::max(r_, std::abs(z))) -
                              trapezoid_log_rho_mean(std::polar(r_, theta0_), M, z));
  if (std::abs(ez) >= 1e-17) acc += smooth_value_at(std::arg(z)) * ez;
  return acc;
}

double CircleSampler::integral() const {
  const double h = kTwoPi / static_cast<double>(samples_.size());
  double acc = 0.0;
  for (double v : samples_) acc += v;
  acc *= h;
  for (double e : zero_errors_) acc += e;
  return acc;
}

std::size_t default_quad_points(double r, std::size_t factor) {
  const double g = 1.0 - r;
  const double base = std::max(512.0, std::ceil(16.0 / g));
  if (base > 1e8) throw NumericalGuardError("circle too close to the boundary for quadrature");
  return static_cast<std::size_t>(base) * std::max<std::size_t>(1, factor);
}

double balayage_V(const CircleSampler& u, Complex z, double delta_eval) {
  const double r = u.radius();
  const double g = 1.0 - r;
  if (static_cast<double>(u.nodes()) * g < 4.0) {
    throw NumericalGuardError("balayage quadrature under-resolved: quad_points * (1 - r) < 4");
  }
  if (rho_radial(std::abs(z), r) < delta_eval) {
    throw ValidationError("balayage evaluated within delta_eval of its circle");
  }
  return -u.integrate_against_log_rho(z) / (kPi * g * (1.0 + r));
}

double balayage_mass(const CircleSampler& u) {
  const double r = u.radius();
  return -u.integral() / (kPi * (1.0 - r) * (1.0 + r));
}

double block_riesz_count(const BlockedSequence& bs, const RadiiSchedule& s, std::size_t j, std::size_t m) {
  const BlockRange br = bs.block(j, m);
  const double r = s.radius(m * j);
  const double g = s.gap(m * j);
  double acc = 0.0;
  for (std::size_t i = br.begin; i < br.end; ++i) {
    const Complex p = bs.point(i);
    acc += std::abs(p) > r ? -std::log1p(-gap_of(p)) : -std::log(r);
  }
  return 2.0 * acc / (g * (1.0 + r));
}

std::vector<Complex> redistribution_grid(const PointSequence& lambda, const RadiiSchedule& s, std::size_t m,
                                         std::size_t radial, std::size_t angular, std::size_t max_index,
                                         double delta) {
  const BlockedSequence bs(lambda, s);
  std::vector<double> mod(bs.size());
  for (std::size_t i = 0; i < bs.size(); ++i) mod[i] = std::abs(bs.point(i));
  std::vector<Complex> out;
  for (const Complex z : radial_grid(s, radial, angular, max_index)) {
    bool ok = nearest_rho_sorted(mod, bs.re(), bs.im(), z) >= delta;
    for (std::size_t j = 1; ok && j <= block_count(s, m); ++j) {
      ok = rho_radial(std::abs(z), s.radius(m * j)) >= delta;
    }
    if (ok) out.push_back(z);
  }
  return out;
}

RedistributionResult redistribution_error(const PointSequence& lambda, const RadiiSchedule& s, std::size_t m,
                                          std::span<const Complex> grid, double delta, std::size_t quad_factor) {
  if (m < 1) throw ValidationError("block size m must be >= 1");
  const BlockedSequence bs(lambda, s);
  std::vector<double> mod(bs.size());
  for (std::size_t i = 0; i < bs.size(); ++i) mod[i] = std::abs(bs.point(i));
  for (const Complex z : grid) {
    if (nearest_rho_sorted(mod, bs.re(), bs.im(), z) < delta) {
      throw ValidationError("redistribution grid point within delta of the sequence");
    }
  }
  struct Block {
    std::size_t j;
    BlockRange range;
    std::unique_ptr<CircleSampler> sampler;
  };
  std::vector<Block> blocks;
  for (std::size_t j = 1; j <= block_count(s, m); ++j) {
    const BlockRange br = bs.block(j, m);
    if (br.end <= br.begin) continue;
    blocks.push_back({j, br, nullptr});
  }
  parallel_for(
      blocks.size(),
      [&](std::size_t b) {
        const BlockRange br = blocks[b].range;
        std::vector<Complex> zeros;
        for (std::size_t i = br.begin; i < br.end; ++i) zeros.push_back(bs.point(i));
        const double r = s.radius(m * blocks[b].j);
        const std::size_t M = default_quad_points(r, quad_factor);
        blocks[b].sampler = std::make_unique<CircleSampler>(zeros, r, M, 0.5 * (std::sqrt(5.0) - 1.0) * kTwoPi / M);
      },
      1);
  RedistributionResult res;
  res.blocks = blocks.size();
  res.grid_points = grid.size();
  std::vector<double> vals(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    double acc = 0.0;
    for (const auto& b : blocks) acc += balayage_V(*b.sampler, grid[g], delta) - bs.log_rho_sum(b.range, grid[g]);
    vals[g] = acc;
  });
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (std::abs(vals[g]) > res.C) {
      res.C = std::abs(vals[g]);
      res.argmax = grid[g];
    }
  }
  return res;
}

DrValue dr_cancellation(Complex z, double r) {
  const double az = std::abs(z);
  if (!(r > 0.0 && r < 1.0) || !(az < r)) throw ValidationError("dr_cancellation requires |z| < r < 1");
  const double z2 = az * az;
  const double a = std::norm(1.0 - z / r);
  const double b = std::norm(1.0 - r * z);
  const double omr2 = (1.0 - r) * (1.0 + r);
  DrValue v;
  v.definition = (1.0 - z2 / (r * r)) / a - (1.0 - z2) / b;
  v.factored = (omr2 * (1.0 - z2) * (1.0 - z2) / (a * b) - omr2 / a) / (r * r);
  v.agree = std::abs(v.definition - v.factored) <= 1e-12 * std::max(1.0, std::abs(v.definition));
  return v;
}

double dr_schedule_sum(const RadiiSchedule& s, Complex z, std::size_t m) {
  if (m < 1) throw ValidationError("block size m must be >= 1");
  double acc = 0.0;
  for (std::size_t k = 0; k <= s.size(); k += m) {
    const double r = s.radius(k);
    if (!(r > std::abs(z)) || !(r < 1.0)) continue;
    acc += std::abs(dr_cancellation(z, r).factored);
  }
  return acc;
}

double nz_circle_mass(const RadiiSchedule& s, std::size_t m, std::size_t j) {
  return static_cast<double>(m) * kLog2 / (2.0 * s.gap(m * j));
}

double nz_potential(const RadiiSchedule& s, std::size_t m, Complex z) {
  if (m < 1) throw ValidationError("block size m must be >= 1");
  const double az = std::abs(z);
  double acc = 0.0;
  for (std::size_t j = 1; j <= block_count(s, m); ++j) {
    const double r = s.radius(m * j);
    if (az > r) acc += nz_circle_mass(s, m, j) * std::log(az / r);
  }
  return acc;
}

double nz_potential_quadrature(const RadiiSchedule& s, std::size_t m, Complex z, std::size_t quad_points) {
  if (m < 1 || quad_points < 1) throw ValidationError("nz_potential_quadrature needs m >= 1 and nodes >= 1");
  double acc = 0.0;
  for (std::size_t j = 1; j <= block_count(s, m); ++j) {
    const double r = s.radius(m * j);
    double mean = 0.0;
    for (std::size_t k = 0; k < quad_points; ++k) {
      const double t = kTwoPi * (static_cast<double>(k) + 0.5) / static_cast<double>(quad_points);
      mean += std::log(std::abs(z - std::polar(r, t)));
    }
    mean /= static_cast<double>(quad_points);
    acc += nz_circle_mass(s, m, j) * (mean - std::log(r));
  }
  return acc;
}

AtomizeResult atomize(double r, double total_riesz_mass, double phase) {
  if (!(total_riesz_mass >= 0.0) || !std::isfinite(total_riesz_mass)) {
    throw ValidationError("atomize needs a finite nonnegative mass");
  }
  if (!(r > 0.0 && r < 1.0)) throw ValidationError("atomize needs a circle radius in (0, 1)");
  AtomizeResult res;
  const double q = total_riesz_mass / kTwoPi;
  // Tolerate rounding just below an integer count.
  res.count = static_cast<std::size_t>(std::floor(q + 1e-12 * std::max(1.0, q)));
  res.remainder = std::max(0.0, total_riesz_mass - kTwoPi * static_cast<double>(res.count));
  res.points.reserve(res.count);
  for (std::size_t k = 0; k < res.count; ++k) {
    res.points.push_back(std::polar(r, phase + kTwoPi * static_cast<double>(k) / static_cast<double>(res.count)));
  }
  return res;
}

GModel::GModel(GCase kind, PointSequence lambda, RadiiSchedule s, std::vector<AtomCircle> circles, double epsilon,
               std::size_t m)
    : kind_(kind), lambda_(std::move(lambda)), schedule_(std::move(s)), circles_(std::move(circles)),
      epsilon_(epsilon), m_(m) {
  if (!(epsilon > 0.0 && epsilon < kDensityThreshold)) throw ValidationError("epsilon must lie in (0, (log 2)/2)");
  for (const auto& c : circles_) {
    if (!(c.radius > 0.0 && c.radius < 1.0)) throw ValidationError("atom circle radius must lie in (0, 1)");
    if (kind_ == GCase::interpolation && c.sign < 0) throw ValidationError("interpolation model cannot have poles");
  }
  const std::size_t n = lambda_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> mod(n);
  for (std::size_t i = 0; i < n; ++i) mod[i] = std::abs(lambda_[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mod[a] < mod[b]; });
  sorted_mod_.resize(n);
  sorted_re_.resize(n);
  sorted_im_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sorted_mod_[i] = mod[order[i]];
    sorted_re_[i] = lambda_[order[i]].real();
    sorted_im_[i] = lambda_[order[i]].imag();
  }
}

std::vector<Complex> GModel::atom_zeros() const {
  std::vector<Complex> out;
  for (const auto& c : circles_) {
    if (c.sign > 0) {
      for (std::size_t k = 0; k < c.count; ++k) out.push_back(c.atom(k));
    }
  }
  return out;
}

std::vector<Complex> GModel::poles() const {
  std::vector<Complex> out;
  for (const auto& c : circles_) {
    if (c.sign < 0) {
      for (std::size_t k = 0; k < c.count; ++k) out.push_back(c.atom(k));
    }
  }
  return out;
}

std::size_t GModel::zero_count() const noexcept {
  std::size_t n = lambda_.size();
  for (const auto& c : circles_) n += c.sign > 0 ? c.count : 0;
  return n;
}

std::size_t GModel::pole_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : circles_) n += c.sign < 0 ? c.count : 0;
  return n;
}

Complex GModel::log_atoms(Complex z) const {
  Complex acc{0.0, 0.0};
  for (const auto& c : circles_) {
    if (c.count == 0) continue;
    const Complex l = log_circle_factor(z, c.radius, c.count, c.phase);
    acc += c.sign > 0 ? l : -l;
  }
  return {acc.real(), reduce_angle(acc.imag())};
}

double GModel::log_abs(Complex z) const {
  double acc = lambda_.empty() ? 0.0
                               : kernels::active().log_rho_sum(z.real(), z.imag(), lambda_.re().data(),
                                                               lambda_.im().data(), lambda_.size());
  for (const auto& c : circles_) {
    if (c.count == 0) continue;
    const double l = log_abs_circle_factor(z, c.radius, c.count, c.phase);
    acc += c.sign > 0 ? l : -l;
  }
  return acc;
}

Complex GModel::log_value(Complex z) const {
  double ang = 0.0;
  for (std::size_t i = 0; i < lambda_.size(); ++i) {
    const Complex a = lambda_[i];
    ang += std::arg((z - a) * std::conj(1.0 - std::conj(a) * z));
  }
  const Complex atoms = log_atoms(z);
  const double mod = lambda_.empty() ? 0.0
                                     : kernels::active().log_rho_sum(z.real(), z.imag(), lambda_.re().data(),
                                                                     lambda_.im().data(), lambda_.size());
  return {mod + atoms.real(), reduce_angle(ang + atoms.imag())};
}

Complex GModel::log_quotient(Complex z, std::size_t j) const {
  const std::size_t n = lambda_.size();
  if (j >= n) throw ValidationError("log_quotient index out of range");
  const Complex lj = lambda_[j];
  const auto& k = kernels::active();
  const double* re = lambda_.re().data();
  const double* im = lambda_.im().data();
  double mod = 0.0;
  if (j > 0) mod += k.log_rho_sum(z.real(), z.imag(), re, im, j);
  if (j + 1 < n) mod += k.log_rho_sum(z.real(), z.imag(), re + j + 1, im + j + 1, n - j - 1);
  double ang = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == j) continue;
    const Complex a = lambda_[i];
    ang += std::arg((z - a) * std::conj(1.0 - std::conj(a) * z));
  }
  const Complex own = -std::log(1.0 - std::conj(lj) * z);
  const Complex atoms = log_atoms(z);
  return {mod + own.real() + atoms.real(), reduce_angle(ang + own.imag() + atoms.imag())};
}

Complex GModel::log_derivative_at(std::size_t j) const { 
  if (j >= lambda_.size()) throw ValidationError("derivative index out of range");
  return log_quotient(lambda_[j], j);
}

const std::vector<Complex>& GModel::log_derivatives() const {
  std::call_once(derivatives_->once, [this] {
    std::vector<Complex> v(lambda_.size());
    parallel_for(v.size(), [&](std::size_t j) { v[j] = log_derivative_at(j); }, 16);
    derivatives_->values = std::move(v);
  });
  return derivatives_->values;
}

double GModel::rho_to_lambda(Complex z) const { return nearest_rho_sorted(sorted_mod_, sorted_re_, sorted_im_, z); }

double GModel::rho_to_circles(Complex z, int sign) const {
  double best = 1.0;
  const double az = std::abs(z);
  for (const auto& c : circles_) {
    if (c.sign != sign || c.count == 0) continue;
    if (rho_radial(az, c.radius) >= best) continue;
    best = std::min(best, rho_to_atoms(z, c.radius, c.count, c.phase));
  }
  return best;
}

double GModel::rho_to_zeros(Complex z) const { return std::min(rho_to_lambda(z), rho_to_circles(z, +1)); }
double GModel::rho_to_poles(Complex z) const { return rho_to_circles(z, -1); }

std::vector<BlockCheck> block_condition(const BlockedSequence& bs, const RadiiSchedule& s, GCase kind,
                                        double epsilon, std::size_t m, std::size_t samples) {
  if (m < 1 || samples < 1) throw ValidationError("block_condition needs m >= 1 and samples >= 1");
  std::vector<BlockCheck> out;
  for (std::size_t j = 1; m * j + m - 1 <= s.size(); ++j) out.push_back({j, 0.0, 0.0, true});
  const double scale = static_cast<double>(m) * kDensityThreshold;
  parallel_for(
      out.size(),
      [&](std::size_t b) {
        BlockCheck& c = out[b];
        const BlockRange br = bs.block(c.j, m);
        const double r = s.radius(m * c.j);
        std::vector<double> mod;
        for (std::size_t i = br.begin; i < br.end; ++i) mod.push_back(std::abs(bs.point(i)));
        const auto re = bs.re().subspan(br.begin, br.end - br.begin);
        const auto im = bs.im().subspan(br.begin, br.end - br.begin);
        double hi = -kInf;
        double lo = kInf;
        for (std::size_t k = 0; k < samples; ++k) {
          const Complex z = std::polar(r, kTwoPi * (static_cast<double>(k) + 0.381966) / static_cast<double>(samples));
          const double u = bs.log_rho_sum(br, z);
          const double near = br.end > br.begin ? nearest_rho_sorted(mod, re, im, z) : 1.0;
          const double minus_u = -(u - std::log(near));
          hi = std::max(hi, minus_u);
          lo = std::min(lo, minus_u);
        }
        if (kind == GCase::interpolation) {
          c.extreme = hi;
          c.bound = (1.0 - epsilon) * scale;
          c.ok = hi <= c.bound;
        } else {
          c.extreme = lo;
          c.bound = (1.0 + epsilon) * scale;
          c.ok = lo >= c.bound;
        }
      },
      1);
  return out;
}

namespace {

struct Placement {
  double phase = 0.0;
  double score = 1.0;
};

/// Best of `candidates` phases within one atom spacing of `base`, scored by
/// the min rho from the atoms to the nearby sequence points.
Placement search_phase(const BlockedSequence& bs, std::span<const double> mod, double r, std::size_t K,
                       double base, std::size_t candidates) {
  Placement best{base, -1.0};
  if (K == 0) return {base, 1.0};
  const double g = 1.0 - r;
  const double lo_mod = 1.0 - 4.0 * g;
  const double hi_mod = 1.0 - g / 4.0;
  const auto lo = static_cast<std::size_t>(std::lower_bound(mod.begin(), mod.end(), lo_mod) - mod.begin());
  const auto hi = static_cast<std::size_t>(std::upper_bound(mod.begin(), mod.end(), hi_mod) - mod.begin());
  const double step = kTwoPi / static_cast<double>(K);
  for (std::size_t c = 0; c < std::max<std::size_t>(1, candidates); ++c) {
    const double phi = base + step * static_cast<double>(c) / static_cast<double>(std::max<std::size_t>(1, candidates));
    double score = 1.0;
    for (std::size_t i = lo; i < hi && score > best.score; ++i) {
      score = std::min(score, rho_to_atoms(bs.point(i), r, K, phi));
    }
    if (score > best.score) best = {phi, score};
  }
  return best;
}

}  // namespace

GModel build_G(const PointSequence& lambda, const RadiiSchedule& s, const BuildOptions& opt, BuildReport* report) {
  const std::size_t N = s.size();
  if (N < 3) throw ValidationError("build_G needs a schedule with N >= 3");
  BuildReport rep;
  DensityOptions dopt = opt.density;
  dopt.m_max = std::min(dopt.m_max, default_m_max(s));
  dopt.m_min = std::min(dopt.m_min, dopt.m_max);
  if (opt.d_plus) {
    rep.d_plus = *opt.d_plus;
  } else {
    rep.d_plus = lambda.empty() ? 0.0 : upper_density(lambda, s, dopt).d_plus_est;
  }
  if (opt.kind == GCase::sampling) {
    rep.d_minus = opt.d_minus ? *opt.d_minus : lower_density(lambda, s, dopt).d_minus_est;
  } else {
    rep.d_minus = opt.d_minus.value_or(0.0);
  }
  if (opt.kind == GCase::interpolation) {
    if (!(rep.d_plus < kDensityThreshold)) {
      throw ValidationError("interpolation construction needs d_plus < (log 2)/2, measured " + std::to_string(rep.d_plus));
    }
  } else {
    if (!(rep.d_minus > kDensityThreshold)) {
      throw ValidationError("sampling construction needs d_minus > (log 2)/2, measured " + std::to_string(rep.d_minus));
    }
    if (!std::isfinite(rep.d_plus)) throw ValidationError("sampling construction needs a finite d_plus");
  }
  const double eps0 = opt.epsilon ? *opt.epsilon
                                  : (opt.kind == GCase::interpolation ? (kDensityThreshold - rep.d_plus) / 2.0
                                                                      : (rep.d_minus - kDensityThreshold) / 2.0);
  if (!(eps0 > 0.0 && eps0 < kDensityThreshold)) throw ValidationError("epsilon must lie in (0, (log 2)/2)");
  rep.epsilon_initial = eps0;

  const BlockedSequence bs(lambda, s);
  std::vector<double> mod(bs.size());
  for (std::size_t i = 0; i < bs.size(); ++i) mod[i] = std::abs(bs.point(i));

  // Block condition: smallest m (or the given one), shrinking epsilon if needed.
  const std::size_t m_hi = opt.m ? *opt.m : std::min(opt.m_cap, (N + 1) / 2);
  const std::size_t m_lo = opt.m ? *opt.m : 1;
  if (m_lo < 1 || 2 * m_lo > N + 1) throw ValidationError("block size m must satisfy 1 <= m <= (N + 1)/2");
  bool found = false;
  double eps = eps0;
  for (std::size_t shrink = 0; shrink <= opt.max_shrink && !found; ++shrink) {
    eps = eps0 / std::ldexp(1.0, static_cast<int>(shrink));
    for (std::size_t m = m_lo; m <= m_hi && !found; ++m) {
      auto checks = block_condition(bs, s, opt.kind, eps, m, opt.block_samples);
      const bool ok = std::all_of(checks.begin(), checks.end(), [](const BlockCheck& c) { return c.ok; });
      if (ok) {
        found = true;
        rep.m = m;
        rep.checks = std::move(checks);
        rep.shrink_steps = shrink;
      }
    }
  }
  if (!found) {
    if (!opt.m) throw ValidationError("no block size m <= m_cap satisfies the block condition");
    eps = eps0;
    rep.m = *opt.m;
    rep.checks = block_condition(bs, s, opt.kind, eps, rep.m, opt.block_samples);
    rep.shrink_steps = 0;
  }
  rep.m_auto = !opt.m;
  rep.block_condition_ok = found;
  rep.epsilon = eps;
  const std::size_t m = rep.m;

  // Signed counts per circle and their atoms.
  const std::size_t J = block_count(s, m);
  std::vector<std::vector<AtomCircle>> per_block(J + 1);
  std::vector<int> negative(J + 1, 0);
  parallel_for(
      J,
      [&](std::size_t b) {
        const std::size_t j = b + 1;
        const double r = s.radius(m * j);
        const double g = s.gap(m * j);
        double nu = block_riesz_count(bs, s, j, m);
        if (opt.quad_factor > 0) {
          const BlockRange br = bs.block(j, m);
          std::vector<Complex> zeros;
          for (std::size_t i = br.begin; i < br.end; ++i) zeros.push_back(bs.point(i));
          const std::size_t M = default_quad_points(r, opt.quad_factor);
          nu = balayage_mass(CircleSampler(zeros, r, M, 0.5 * (std::sqrt(5.0) - 1.0) * kTwoPi / M));
        }
        const double a = nz_circle_mass(s, m, j);
        const double target = opt.kind == GCase::interpolation ? (1.0 - eps) * a - nu : nu - (1.0 + eps) * a;
        AtomCircle proto;
        proto.block = j;
        proto.sign = opt.kind == GCase::interpolation ? 1 : -1;
        proto.target = target;
        proto.block_mass = nu;
        proto.n_mass = a;
        if (target <= 0.0) {
          negative[j] = 1;
          return;
        }
        const auto at = atomize(r, kTwoPi * target, 0.0);
        if (at.count == 0) return;
        proto.remainder = at.remainder / kTwoPi;
        double base = kGoldenAngle * static_cast<double>(j) + opt.phase_offset;
        if (opt.randomize_phase) base += CounterRng(opt.seed, j).uniform(0.0, kTwoPi);

        Placement p = search_phase(bs, mod, r, at.count, base, opt.phase_candidates);
        if (p.score >= opt.delta) {
          AtomCircle c = proto;
          c.radius = r;
          c.gap = g;
          c.count = at.count;
          c.phase = p.phase;
          c.min_rho_to_lambda = p.score;
          per_block[j].push_back(c);
          return;
        }
        // Split between an outer and an inner circle with log r_in + log r_out = 2 log r,
        // so the potential outside both is unchanged.
        const double g_out = m * j + 1 <= N ? std::sqrt(g * s.gap(m * j + 1)) : g / std::sqrt(2.0);
        const double r_out = 1.0 - g_out;
        const double g_in = (2.0 * g - g * g - g_out) / r_out;
        const double r_in = 1.0 - g_in;
        const std::size_t k_in = at.count / 2;
        const std::size_t k_out = at.count - k_in;
        const Placement po = search_phase(bs, mod, r_out, k_out, base, opt.phase_candidates);
        const Placement pi = search_phase(bs, mod, r_in, k_in, base + 0.5, opt.phase_candidates);
        const double split_score = std::min(po.score, pi.score);
        if (split_score < opt.delta && opt.kind == GCase::sampling) {
          throw NumericalGuardError("cannot place poles of block " + std::to_string(j) +
                                    " at rho >= delta from the sequence");
        }
        if (split_score <= p.score) {
          AtomCircle c = proto;
          c.radius = r;
          c.gap = g;
          c.count = at.count;
          c.phase = p.phase;
          c.min_rho_to_lambda = p.score;
          per_block[j].push_back(c);
          return;
        }
        AtomCircle co = proto;
        co.radius = r_out;
        co.gap = g_out;
        co.count = k_out;
        co.phase = po.phase;
        co.min_rho_to_lambda = po.score;
        co.shifted = true;
        per_block[j].push_back(co);
        if (k_in > 0) {
          AtomCircle ci = proto;
          ci.radius = r_in;
          ci.gap = g_in;
          ci.count = k_in;
          ci.phase = pi.phase;
          ci.min_rho_to_lambda = pi.score;
          ci.remainder = 0.0;
          ci.shifted = true;
          per_block[j].push_back(ci);
        }
      },
      1);

  std::vector<AtomCircle> circles;
  for (std::size_t j = 1; j <= J; ++j) {
    rep.negative_blocks += static_cast<std::size_t>(negative[j]);
    for (auto& c : per_block[j]) {
      rep.shifted_circles += c.shifted ? 1 : 0;
      rep.min_pole_zero_rho = std::min(rep.min_pole_zero_rho, c.min_rho_to_lambda);
      if (c.count >= 2) {
        rep.half_atom_spacing = std::min(rep.half_atom_spacing, 0.5 * rho(c.atom(0), c.atom(1)));
      }
      circles.push_back(c);
    }
  }
  if (report) *report = rep;
  return GModel(opt.kind, lambda, s, std::move(circles), eps, m);
}

std::vector<Complex> guard_grid(const GModel& g, std::size_t radial, std::size_t angular, std::size_t max_index,
                                double delta) {
  std::vector<Complex> out;
  for (const Complex z : radial_grid(g.schedule(), radial, angular, max_index)) {
    if (g.rho_to_zeros(z) >= delta && g.rho_to_poles(z) >= delta) out.push_back(z);
  }
  return out;
}

VerifyResult verify_G(const GModel& g, std::span<const Complex> grid, double delta) {
  VerifyResult res;
  res.grid_points = grid.size();
  if (grid.empty()) return res;
  const double factor = g.kind() == GCase::interpolation ? 1.0 - g.epsilon() : 1.0 + g.epsilon();
  std::vector<double> stat(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const Complex z = grid[i];
    const double rz = g.rho_to_zeros(z);
    const double rp = g.rho_to_poles(z);
    if (rz < delta || rp < delta) throw ValidationError("verify_G grid point violates the rho guard");
    const double n = static_cast<double>(g.schedule().annulus_index(z).n);
    stat[i] = 2.0 * g.log_abs(z) - factor * n * kLog2 - 2.0 * std::log(rz) + 2.0 * std::log(rp);
  });
  res.min_log_ratio = kInf;
  res.max_log_ratio = -kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (stat[i] < res.min_log_ratio) {
      res.min_log_ratio = stat[i];
      res.argmin = grid[i];
    }
    if (stat[i] > res.max_log_ratio) {
      res.max_log_ratio = stat[i];
      res.argmax = grid[i];
    }
  }
  return res;
}

}  // namespace bergman
