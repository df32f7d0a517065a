#include "bergman/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bergman/error.hpp"
#include "bergman/kernels.hpp"

namespace bergman {
namespace {

constexpr double kSeriesCut = 1e-17;
constexpr std::size_t kRowChunk = 64;

}  // namespace

KernelModel::KernelModel(RadiiSchedule s, std::size_t degree, double tail_rel_tol)
    : schedule_(std::move(s)), tail_rel_tol_(tail_rel_tol) {
  if (schedule_.size() < 1) throw ValidationError("kernel model needs N >= 1");
  const std::size_t N = schedule_.size();
  coeffs_.assign(degree + 1, 0.0);
  std::vector<long double> log_r(N + 1);
  for (std::size_t n = 1; n <= N; ++n) log_r[n] = std::log1p(-static_cast<long double>(schedule_.gap(n)));
  for (std::size_t k = 0; k <= degree; ++k) {
    long double acc = 0.0L;
    for (std::size_t n = 1; n <= N; ++n) {
      const long double term = std::ldexp(1.0L, -static_cast<int>(n));
      acc += k == 0 ? term : term * std::exp(2.0L * static_cast<long double>(k) * log_r[n]);
    }
    coeffs_[k] = static_cast<double>(acc);
  }
  inv_coeffs_.resize(coeffs_.size());
  for (std::size_t k = 0; k <= degree; ++k) {
    inv_coeffs_[k] = coeffs_[k] > 0.0 ? 1.0 / coeffs_[k] : std::numeric_limits<double>::infinity();
  }
}

double KernelModel::tail_bound(double x) const {
  const std::size_t N = schedule_.size();
  const double D = static_cast<double>(degree());
  double best = std::numeric_limits<double>::infinity();
  if (x == 0.0) return 0.0;
  for (std::size_t n = 1; n <= N; ++n) {
    const double log_q = std::log(x) - 2.0 * std::log1p(-schedule_.gap(n));
    if (!(log_q < 0.0)) continue;
    const double log_b = static_cast<double>(n) * kLog2 + (D + 1.0) * log_q - std::log(-std::expm1(log_q));
    best = std::min(best, std::exp(log_b));
  }
  return best;
}

std::size_t KernelModel::effective_degree(double x) const {
  const std::size_t D = degree();
  if (x == 0.0) return 0;
  const std::size_t N = schedule_.size();
  const double log_target = std::log(kSeriesCut) - std::log(coeffs_[0]);
  double best = static_cast<double>(D);
  for (std::size_t n = 1; n <= N; ++n) {
    const double log_q = std::log(x) - 2.0 * std::log1p(-schedule_.gap(n));
    if (!(log_q < 0.0)) continue;
    // 2^n q^{K+1} / (1 - q) <= target
    const double K = (log_target - static_cast<double>(n) * kLog2 + std::log(-std::expm1(log_q))) / log_q - 1.0;
    best = std::min(best, std::max(0.0, std::ceil(K)));
  }
  return static_cast<std::size_t>(best);
}

KernelValue KernelModel::kernel(Complex z, Complex zeta) const {
  const Complex w = z * std::conj(zeta);
  const double x = std::abs(w);
  const std::size_t K = effective_degree(x);
  double re = 0.0;
  double im = 0.0;
  const double wr = w.real();
  const double wi = w.imag();
  kernels::active().complex_series(inv_coeffs_.data(), K + 1, &wr, &wi, &re, &im, 1);
  KernelValue out{Complex(re, im), tail_bound(x), false};
  if (out.tail_bound > 0.0) {
    double scale = 0.0;
    kernels::active().real_series(inv_coeffs_.data(), K + 1, &x, &scale, 1);
    out.tail_flag = out.tail_bound > tail_rel_tol_ * scale;
  }
  return out;
}

double KernelModel::diag(Complex z) const {
  const double x = std::norm(z);
  double out = 0.0;
  kernels::active().real_series(inv_coeffs_.data(), effective_degree(x) + 1, &x, &out, 1);
  return out;
}

void KernelModel::diag_batch(std::span<const Complex> z, std::span<double> out) const {
  if (out.size() != z.size()) throw ValidationError("diag_batch size mismatch");
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::norm(z[a]) < std::norm(z[b]); });
  std::vector<double> x(kRowChunk);
  std::vector<double> v(kRowChunk);
  for (std::size_t lo = 0; lo < order.size(); lo += kRowChunk) {
    const std::size_t hi = std::min(order.size(), lo + kRowChunk);
    double xmax = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      x[i - lo] = std::norm(z[order[i]]);
      xmax = std::max(xmax, x[i - lo]);
    }
    kernels::active().real_series(inv_coeffs_.data(), effective_degree(xmax) + 1, x.data(), v.data(), hi - lo);
    for (std::size_t i = lo; i < hi; ++i) out[order[i]] = v[i - lo];
  }
}

void KernelModel::kernel_row(Complex z, std::span<const Complex> zeta, std::span<Complex> out) const {
  if (out.size() != zeta.size()) throw ValidationError("kernel_row size mismatch");
  std::vector<std::size_t> order(zeta.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::norm(zeta[a]) < std::norm(zeta[b]); });
  std::vector<double> wr(kRowChunk), wi(kRowChunk), vr(kRowChunk), vi(kRowChunk);
  for (std::size_t lo = 0; lo < order.size(); lo += kRowChunk) {
    const std::size_t hi = std::min(order.size(), lo + kRowChunk);
    double xmax = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const Complex w = z * std::conj(zeta[order[i]]);
      wr[i - lo] = w.real();
      wi[i - lo] = w.imag();
      xmax = std::max(xmax, std::abs(w));
    }
    kernels::active().complex_series(inv_coeffs_.data(), effective_degree(xmax) + 1, wr.data(), wi.data(),
                                     vr.data(), vi.data(), hi - lo);
    for (std::size_t i = lo; i < hi; ++i) out[order[i]] = Complex(vr[i - lo], vi[i - lo]);
  }
}

KernelModel monomial_norms(const RadiiSchedule& s, std::size_t D) { return KernelModel(s, D); }

std::size_t default_degree(const RadiiSchedule& s) {
  const std::size_t N = s.size();
  const std::size_t idx = N >= 2 ? N - 2 : 0;
  const double d = std::ceil(12.0 / s.gap(idx));
  if (!(d < 1e8)) throw ValidationError("default kernel degree is not representable; pass an explicit degree");
  return std::max<std::size_t>(600, static_cast<std::size_t>(d));
}

Complex poly_eval(std::span<const Complex> a, Complex z) {
  Complex acc = 0.0;
  for (std::size_t k = a.size(); k-- > 0;) acc = acc * z + a[k];
  return acc;
}

double norm_poly(const KernelModel& km, std::span<const Complex> a) {
  if (a.size() > km.degree() + 1) throw ValidationError("polynomial degree exceeds kernel model degree");
  long double acc = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<long double>(std::norm(a[k])) * km.coeff(k);
  return static_cast<double>(acc);
}

Complex inner_product_poly(const KernelModel& km, std::span<const Complex> a, std::span<const Complex> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n > km.degree() + 1) throw ValidationError("polynomial degree exceeds kernel model degree");
  std::complex<long double> acc = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    const Complex t = a[k] * std::conj(b[k]) * km.coeff(k);
    acc += std::complex<long double>(t.real(), t.imag());
  }
  return Complex(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
}

std::vector<Complex> kernel_coefficients(const KernelModel& km, Complex zeta) {
  std::vector<Complex> b(km.degree() + 1);
  Complex p = 1.0;
  const Complex zc = std::conj(zeta);
  for (std::size_t k = 0; k < b.size(); ++k) {
    b[k] = p * km.inv_coeffs()[k];
    p *= zc;
  }
  return b;
}

double norm_fn_quadrature(const RadiiSchedule& s, const AnalyticFn& f,
                          const std::function<std::size_t(std::size_t)>& points_for_circle) {
  long double total = 0.0L;
  for (std::size_t n = 1; n <= s.size(); ++n) {
    const std::size_t M = points_for_circle(n);
    if (M < 1) throw ValidationError("circle quadrature needs at least one point");
    const double r = s.radius(n);
    long double circle = 0.0L;
    for (std::size_t k = 0; k < M; ++k) {
      const Complex v = f(std::polar(r, kTwoPi * static_cast<double>(k) / static_cast<double>(M)));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw NumericalGuardError("non-finite function value on circle r_" + std::to_string(n));
      }
      circle += std::norm(v);
    }
    total += std::ldexp(circle / static_cast<long double>(M), -static_cast<int>(n));
  }
  return static_cast<double>(total);
}

double norm_fn_quadrature(const RadiiSchedule& s, const AnalyticFn& f, std::size_t circle_points) {
  return norm_fn_quadrature(s, f, [circle_points](std::size_t) { return circle_points; });
}

Complex inner_product_quadrature(const RadiiSchedule& s, const AnalyticFn& f, const AnalyticFn& g,
                                 std::size_t circle_points) {
  if (circle_points < 1) throw ValidationError("circle quadrature needs at least one point");
  std::complex<long double> total = 0.0L;
  for (std::size_t n = 1; n <= s.size(); ++n) {
    const double r = s.radius(n);
    std::complex<long double> circle = 0.0L;
    for (std::size_t k = 0; k < circle_points; ++k) {
      const Complex z = std::polar(r, kTwoPi * static_cast<double>(k) / static_cast<double>(circle_points));
      const Complex v = f(z) * std::conj(g(z));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw NumericalGuardError("non-finite function value on circle r_" + std::to_string(n));
      }
      circle += std::complex<long double>(v.real(), v.imag());
    }
    total += circle * std::ldexp(1.0L, -static_cast<int>(n)) / static_cast<long double>(circle_points);
  }
  return Complex(static_cast<double>(total.real()), static_cast<double>(total.imag()));
}

// m_k = 2 int_0^1 r^{2k+1} w(r) dr = 2(2k+1) int_0^1 r^{2k} T(r) dr after
// integrating by parts; with 1 - r = e^{-u} the integrand decays like e^{-u}.
double area_norm_poly(const Weight& w, std::span<const Complex> a, std::size_t radial_points) {
  if (radial_points < 8) throw ValidationError("area norm needs at least 8 radial points");
  constexpr double kUMax = 60.0;
  const std::size_t M = radial_points + (radial_points % 2);
  const double h = kUMax / static_cast<double>(M);
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == Complex(0.0)) continue;
    double acc = 0.0;
    for (std::size_t i = 0; i <= M; ++i) {
      const double u = h * static_cast<double>(i);
      const double t = std::exp(-u);
      const double r = -std::expm1(-u);
      const double f = (k == 0 ? 1.0 : std::pow(r, 2.0 * static_cast<double>(k))) * w.tail_from_gap(t) * t;
      const double simpson = (i == 0 || i == M) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += simpson * f;
    }
    const double moment = 2.0 * (2.0 * static_cast<double>(k) + 1.0) * acc * h / 3.0;
    total += std::norm(a[k]) * moment;
  }
  return total;
}

std::vector<Complex> radial_grid(const RadiiSchedule& s, std::size_t radial, std::size_t angular,
                                 std::size_t max_index) {
  if (radial < 1 || angular < 1) throw ValidationError("grid needs positive radial and angular counts");
  if (max_index > s.size()) throw ValidationError("grid extends beyond the schedule");
  std::vector<Complex> grid;
  grid.reserve(radial * angular);
  for (std::size_t i = 0; i < radial; ++i) {
    const double u = radial == 1 ? 0.0
                                 : static_cast<double>(max_index) * static_cast<double>(i) /
                                       static_cast<double>(radial - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(u));
    const std::size_t hi = std::min(lo + 1, max_index);
    const double frac = u - static_cast<double>(lo);
    double r;
    if (lo == 0 && frac == 0.0) {
      r = 0.0;
    } else if (lo == 0) {
      // r_0 = 0 has no useful log-gap; interpolate linearly on the first annulus.
      r = frac * s.radius(1);
    } else {
      r = 1.0 - std::exp((1.0 - frac) * std::log(s.gap(lo)) + frac * std::log(s.gap(hi)));
    }
    const double phase = kGoldenAngle * static_cast<double>(i);
    for (std::size_t k = 0; k < angular; ++k) {
      grid.push_back(std::polar(r, phase + kTwoPi * static_cast<double>(k) / static_cast<double>(angular)));
    }
  }
  return grid;
}

double diag_ratio(const KernelModel& km, Complex z) {
  const auto idx = km.schedule().annulus_index(z);
  return km.diag(z) * (1.0 - std::abs(z)) * std::ldexp(1.0, -static_cast<int>(idx.n));
}

DiagStats diag_ratio_stats(const KernelModel& km, std::span<const Complex> grid) {
  if (grid.empty()) throw ValidationError("diag_ratio_stats needs a nonempty grid");
  std::vector<double> diag(grid.size());
  km.diag_batch(grid, diag);
  DiagStats st;
  st.min_ratio = std::numeric_limits<double>::infinity();
  st.max_ratio = 0.0;
  st.count = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = km.schedule().annulus_index(grid[i]);
    const double x = std::norm(grid[i]);
    const double ratio = diag[i] * (1.0 - std::abs(grid[i])) * std::ldexp(1.0, -static_cast<int>(idx.n));
    if (km.tail_bound(x) > km.tail_rel_tol() * diag[i] || idx.overflow) st.tail_flag = true;
    if (ratio < st.min_ratio) {
      st.min_ratio = ratio;
      st.argmin = grid[i];
    }
    if (ratio > st.max_ratio) {
      st.max_ratio = ratio;
      st.argmax = grid[i];
    }
  }
  return st;
}

double pointwise_bound_check(const KernelModel& km, std::span<const PolySample> samples) {
  double worst = 0.0;
  for (const auto& s : samples) {
    const double nrm = norm_poly(km, s.coeffs);
    if (!(nrm > 0.0)) throw ValidationError("pointwise bound check on a zero-norm polynomial");
    const auto idx = km.schedule().annulus_index(s.z);
    const double v = std::norm(poly_eval(s.coeffs, s.z)) * (1.0 - std::abs(s.z)) *
                     std::ldexp(1.0, -static_cast<int>(idx.n)) / nrm;
    worst = std::max(worst, v);
  }
  return worst;
}

double test_function_norm(const KernelModel& km, Complex zeta, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("test function exponent must be positive");
  const double x = std::norm(zeta);
  long double acc = 0.0L;
  long double b = 1.0L;  // binomial coefficient times |zeta|^k
  for (std::size_t k = 0; k <= km.degree(); ++k) {
    acc += b * b * km.coeff(k);
    b *= (static_cast<long double>(k) + gamma) / (static_cast<long double>(k) + 1.0L) * std::sqrt(static_cast<long double>(x));
    if (b == 0.0L) break;
  }
  return static_cast<double>(acc);
}

ProfileStats test_function_profile(const KernelModel& km, double gamma, std::span<const Complex> zetas) {
  ProfileStats st{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& z : zetas) {
    const auto idx = km.schedule().annulus_index(z);
    const double v = test_function_norm(km, z, gamma) * std::pow(1.0 - std::abs(z), 2.0 * gamma - 1.0) *
                     std::ldexp(1.0, static_cast<int>(idx.n));
    st.min = std::min(st.min, v);
    st.max = std::max(st.max, v);
  }
  return st;
}

}  // namespace bergman
