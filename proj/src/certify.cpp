#include "bergman/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "bergman/error.hpp"
#include "bergman/kernels.hpp"
#include "bergman/parallel.hpp"

namespace bergman {
namespace {

bool kernel_tail_flag(const PointSequence& lambda, const KernelModel& km) {
  double x = 0.0;
  for (const auto& p : lambda.points()) x = std::max(x, std::norm(p));
  if (lambda.empty()) return false;
  return km.tail_bound(x) > km.tail_rel_tol() * km.diag(std::sqrt(x));
}

struct Ring {
  double r = 0.0;
  double phase = 0.0;
  std::size_t count = 0;
};

/// Splits points into equally spaced rings (closed-form frame sums) and the rest.
void split_rings(const PointSequence& lambda, std::vector<Ring>& rings, std::vector<Complex>& rest) {
  const std::size_t n = lambda.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> mod(n);
  for (std::size_t i = 0; i < n; ++i) mod[i] = std::abs(lambda[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mod[a] < mod[b]; });
  std::size_t i = 0;
  while (i < n) {
    std::size_t e = i + 1;
    while (e < n && mod[order[e]] - mod[order[i]] <= 1e-13) ++e;
    const std::size_t K = e - i;
    std::vector<double> ang;
    for (std::size_t q = i; q < e; ++q) ang.push_back(std::arg(lambda[order[q]]));
    std::sort(ang.begin(), ang.end());
    bool ring = mod[order[i]] > 0.0 || K == 1;
    const double step = kTwoPi / static_cast<double>(K);
    for (std::size_t q = 0; ring && q < K; ++q) {
      ring = std::abs(std::remainder(ang[q] - ang[0] - step * static_cast<double>(q), kTwoPi)) <= 1e-9;
    }
    if (ring) {
      double r = 0.0;
      for (std::size_t q = i; q < e; ++q) r += mod[order[q]];
      rings.push_back({r / static_cast<double>(K), ang[0], K});
    } else {
      for (std::size_t q = i; q < e; ++q) rest.push_back(lambda[order[q]]);
    }
    i = e;
  }
}

}  // namespace

GramMatrix normalized_gram(const PointSequence& lambda, const KernelModel& km) {
  const std::size_t n = lambda.size();
  GramMatrix out;
  out.matrix = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (n == 0) return out;
  out.tail_flag = kernel_tail_flag(lambda, km);
  std::vector<double> diag(n);
  km.diag_batch(lambda.points(), diag);
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(diag[i]);
  parallel_for(
      n,
      [&](std::size_t i) {
        std::vector<Complex> row(n);
        km.kernel_row(lambda[i], lambda.points(), row);
        for (std::size_t l = i + 1; l < n; ++l) {
          out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = row[l] * inv_sqrt[i] * inv_sqrt[l];
        }
      },
      8);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.matrix(ii, ii) = 1.0;
    for (std::size_t l = i + 1; l < n; ++l) {
      const auto ll = static_cast<Eigen::Index>(l);
      out.matrix(ll, ii) = std::conj(out.matrix(ii, ll));
    }
  }
  return out;
}

EigenRange hermitian_extremes(const ComplexMatrix& m) {
  if (m.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalGuardError("Hermitian eigensolver did not converge");
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

InterpolationCertificate interpolation_certificate(const PointSequence& lambda, const KernelModel& km,
                                                   double threshold) {
  InterpolationCertificate c;
  if (lambda.empty()) throw ValidationError("interpolation certificate needs at least one point");
  const GramMatrix g = normalized_gram(lambda, km);
  const EigenRange ev = hermitian_extremes(g.matrix);
  c.min_eig = ev.min;
  c.max_eig = ev.max;
  c.tail_flag = g.tail_flag;
  c.separation = lambda.separation();
  c.separated = lambda.separated();
  c.verdict = c.separated && c.min_eig >= threshold;
  return c;
}

ComplexMatrix frame_matrix(const PointSequence& lambda, const KernelModel& km, std::size_t D) {
  if (D > km.degree()) throw ValidationError("frame degree exceeds the kernel model degree");
  const auto dim = static_cast<Eigen::Index>(D + 1);
  ComplexMatrix M = ComplexMatrix::Zero(dim, dim);
  std::vector<Ring> rings;
  std::vector<Complex> rest;
  split_rings(lambda, rings, rest);
  std::vector<double> inv_sqrt_c(D + 1);
  for (std::size_t k = 0; k <= D; ++k) inv_sqrt_c[k] = 1.0 / std::sqrt(km.coeff(k));

  std::vector<double> u(D + 1);
  for (const Ring& ring : rings) {
    const double w = static_cast<double>(ring.count) / km.diag(ring.r);
    double p = 1.0;
    for (std::size_t k = 0; k <= D; ++k) {
      u[k] = p * inv_sqrt_c[k];
      p *= ring.r;
    }
    const std::size_t K = ring.count;
    for (std::size_t a = 0; a <= D; ++a) {
      if (u[a] == 0.0) break;
      for (std::size_t b = a; b <= D; b += K) {
        const double v = w * u[a] * u[b];
        if (v == 0.0) break;
        const Complex e = std::polar(v, -static_cast<double>(b - a) * ring.phase);
        M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += e;
      }
    }
  }
  if (!rest.empty()) {
    ComplexMatrix E(static_cast<Eigen::Index>(rest.size()), dim);
    for (std::size_t j = 0; j < rest.size(); ++j) {
      const double s = 1.0 / std::sqrt(km.diag(rest[j]));
      Complex p = 1.0;
      for (std::size_t k = 0; k <= D; ++k) {
        E(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = std::conj(p) * (inv_sqrt_c[k] * s);
        p *= rest[j];
      }
    }
    // Rows hold conj(e_k(lambda_j)), so E^H E sums e_k conj(e_k') / K.
    M.selfadjointView<Eigen::Upper>().rankUpdate(E.adjoint());
  }
  for (Eigen::Index a = 0; a < dim; ++a) {
    M(a, a) = M(a, a).real();
    for (Eigen::Index b = a + 1; b < dim; ++b) M(b, a) = std::conj(M(a, b));
  }
  return M;
}

FrameBounds frame_bounds(const PointSequence& lambda, const KernelModel& km, std::size_t D) {
  FrameBounds f;
  f.degree = D;
  if (lambda.empty()) return f;
  f.tail_flag = kernel_tail_flag(lambda, km);
  const EigenRange ev = hermitian_extremes(frame_matrix(lambda, km, D));
  f.A = std::max(0.0, ev.min);
  f.B = ev.max;
  return f;
}

FrameLadder frame_ladder(const PointSequence& lambda, const KernelModel& km, std::size_t D0, std::size_t D_max,
                         double tol, std::size_t doublings) {
  if (D0 < 1 || D0 > D_max) throw ValidationError("frame ladder needs 1 <= D0 <= D_max");
  FrameLadder lad;
  for (std::size_t D = D0; D <= D_max; D *= 2) lad.steps.push_back(frame_bounds(lambda, km, D));
  const std::size_t n = lad.steps.size();
  if (n < doublings + 1) return lad;
  auto change = [&](std::size_t i) {
    const double a = lad.steps[i].A;
    const double b = lad.steps[i - 1].A;
    return a > 0.0 ? std::abs(a - b) / a : std::numeric_limits<double>::infinity();
  };
  lad.last_change = change(n - 1);
  const FrameBounds& last = lad.steps.back();
  lad.plateau = last.A > 1e-12 * std::max(1.0, last.B);
  for (std::size_t d = 0; d < doublings && lad.plateau; ++d) lad.plateau = change(n - 1 - d) < tol;
  return lad;
}

double data_norm(const PointSequence& lambda, const KernelModel& km, std::span<const Complex> a) {
  if (a.size() != lambda.size()) throw ValidationError("data length must match the sequence");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += std::norm(a[j]) / km.diag(lambda[j]);
  return acc;
}

double data_norm_surrogate(const PointSequence& lambda, const RadiiSchedule& s, std::span<const Complex> a) {
  if (a.size() != lambda.size()) throw ValidationError("data length must match the sequence");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double g = 1.0 - std::abs(lambda[j]);
    acc += std::norm(a[j]) * g * std::ldexp(1.0, -static_cast<int>(s.annulus_index(lambda[j]).n));
  }
  return acc;
}

namespace {

/// b_j(z) without the trailing factor: G(z) / ((z - lambda_j) G'(lambda_j)).
std::vector<Complex> quotient_basis(const GModel& g, Complex z) {
  const auto& lgp = g.log_derivatives();
  const auto pts = g.lambda().points();
  const Complex lg = g.log_value(z);
  std::vector<Complex> out(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (lgp[j].real() < -700.0) throw NumericalGuardError("G'(lambda_j) underflows");
    Complex lq;
    if (rho(z, pts[j]) >= 1e-3) {
      if (!std::isfinite(lg.real())) {
        out[j] = 0.0;
        continue;
      }
      lq = lg - std::log(z - pts[j]);
    } else {
      lq = g.log_quotient(z, j);
    }
    out[j] = std::exp(lq - lgp[j]);
  }
  return out;
}

}  // namespace

std::vector<Complex> interpolation_basis(const GModel& g, Complex z, double delta_eval) {
  if (g.kind() != GCase::interpolation) throw ValidationError("interpolation operator needs a case I model");
  if (g.rho_to_atom_zeros(z) < delta_eval) throw NumericalGuardError("evaluation point too close to an atom zero");
  auto b = quotient_basis(g, z);
  const auto pts = g.lambda().points();
  for (std::size_t j = 0; j < b.size(); ++j) b[j] *= (1.0 - std::norm(pts[j])) / (1.0 - std::conj(pts[j]) * z);
  return b;
}

Complex interpolate_explicit(const GModel& g, std::span<const Complex> a, Complex z, double delta_eval) {
  if (a.size() != g.lambda().size()) throw ValidationError("data length must match the sequence");
  if (std::all_of(a.begin(), a.end(), [](Complex v) { return v == Complex{}; })) return {};
  const auto b = interpolation_basis(g, z, delta_eval);
  Complex acc{};
  for (std::size_t j = 0; j < b.size(); ++j) acc += a[j] * b[j];
  return acc;
}

std::vector<Complex> sampling_basis(const GModel& g, Complex z, double delta_eval) {
  if (g.kind() != GCase::sampling) throw ValidationError("sampling reconstruction needs a case S model");
  if (g.rho_to_poles(z) < delta_eval) throw NumericalGuardError("evaluation point too close to a pole");
  auto b = quotient_basis(g, z);
  const auto pts = g.lambda().points();
  const double w = 1.0 - std::norm(z);
  for (std::size_t j = 0; j < b.size(); ++j) b[j] *= w / (1.0 - std::conj(z) * pts[j]);
  return b;
}

Complex sampling_reconstruct(const GModel& g, std::span<const Complex> samples, Complex z, double delta_eval) {
  if (samples.size() != g.lambda().size()) throw ValidationError("sample count must match the sequence");
  const auto b = sampling_basis(g, z, delta_eval);
  Complex acc{};
  for (std::size_t j = 0; j < b.size(); ++j) acc += samples[j] * b[j];
  return acc;
}

std::vector<double> basis_norms(const RadiiSchedule& s, const std::function<std::vector<Complex>(Complex)>& basis,
                                std::span<const std::vector<Complex>> data,
                                const std::function<std::size_t(std::size_t)>& points_for_circle) {
  std::vector<double> total(data.size(), 0.0);
  for (std::size_t n = 1; n <= s.size(); ++n) {
    const std::size_t M = points_for_circle(n);
    if (M < 1) throw ValidationError("circle quadrature needs at least one point");
    const double r = s.radius(n);
    std::vector<std::vector<double>> part(M, std::vector<double>(data.size()));
    parallel_for(
        M,
        [&](std::size_t k) {
          const auto b = basis(std::polar(r, kTwoPi * static_cast<double>(k) / static_cast<double>(M)));
          for (std::size_t i = 0; i < data.size(); ++i) {
            if (data[i].size() != b.size()) throw ValidationError("data length must match the basis");
            Complex f{};
            for (std::size_t j = 0; j < b.size(); ++j) f += data[i][j] * b[j];
            part[k][i] = std::norm(f);
          }
        },
        16);
    for (std::size_t i = 0; i < data.size(); ++i) {
      double circle = 0.0;
      for (std::size_t k = 0; k < M; ++k) circle += part[k][i];
      if (!std::isfinite(circle)) throw NumericalGuardError("non-finite function value on circle r_" + std::to_string(n));
      total[i] += std::ldexp(circle / static_cast<double>(M), -static_cast<int>(n));
    }
  }
  return total;
}

NecessityTestFunction::NecessityTestFunction(Complex lambda_l, std::vector<Complex> zeros)
    : anchor_(lambda_l), zeros_(std::move(zeros)) {}

Complex NecessityTestFunction::operator()(Complex z) const {
  double mod = 0.0;
  double ang = 0.0;
  for (const auto& a : zeros_) {
    const Complex num = z - a;
    const Complex den = 1.0 - std::conj(a) * z;
    mod += 0.5 * std::log(std::norm(num) / std::norm(den));
    ang += std::arg(num * std::conj(den));
  }
  return std::polar(std::exp(mod), ang) / (1.0 - std::conj(anchor_) * z);
}

NecessityTestFunction necessity_test_function(const PointSequence& lambda, const RadiiSchedule& s, std::size_t l,
                                              std::size_t m) {
  if (l >= lambda.size()) throw ValidationError("necessity test index out of range");
  const Complex a = lambda[l];
  const std::size_t k = s.annulus_index(a).n + m;
  const double cut = k <= s.size() ? s.radius(k) + std::max(1e-15, 1e-9 * s.gap(k)) : 1.0;
  std::vector<Complex> zeros;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    if (j != l && std::abs(lambda[j]) <= cut) zeros.push_back(lambda[j]);
  }
  return NecessityTestFunction(a, std::move(zeros));
}

NecessityCheck necessity_check(const PointSequence& lambda, const RadiiSchedule& s, std::size_t l, std::size_t m,
                               std::size_t min_circle_points) {
  const auto f = necessity_test_function(lambda, s, l, m);
  const Complex a = f.anchor();
  NecessityCheck c;
  c.lhs = std::norm(f(a)) * (1.0 - std::abs(a)) * std::ldexp(1.0, -static_cast<int>(s.annulus_index(a).n));
  c.norm2 = norm_fn_quadrature(s, [&](Complex z) { return f(z); }, [&](std::size_t n) {
    return std::max(min_circle_points, static_cast<std::size_t>(std::ceil(16.0 / s.gap(n))));
  });
  return c;
}

CertificationReport certify(const PointSequence& lambda, const KernelModel& km, std::size_t D) {
  CertificationReport rep;
  rep.degree_used = D;
  if (lambda.empty()) throw ValidationError("certify needs a nonempty sequence");
  const auto ic = interpolation_certificate(lambda, km);
  rep.gram_min_eig = ic.min_eig;
  rep.gram_max_eig = ic.max_eig;
  rep.separated = ic.separated;
  rep.separation = ic.separation;
  const auto fb = frame_bounds(lambda, km, D);
  rep.frame_A = fb.A;
  rep.frame_B = fb.B;
  rep.tail_flag = ic.tail_flag || fb.tail_flag;
  return rep;
}

CertificationReport certify(const PointSequence& lambda, const KernelModel& km, std::size_t D, const GModel& g,
                            std::span<const Complex> data, std::size_t min_circle_points) {
  if (g.lambda().size() != lambda.size()) throw ValidationError("model was built for a different sequence");
  if (data.size() != lambda.size()) throw ValidationError("data length must match the sequence");
  CertificationReport rep = certify(lambda, km, D);
  double scale = 0.0;
  for (const auto& v : data) scale = std::max(scale, std::abs(v));
  rep.residuals.resize(lambda.size(), 0.0);
  if (scale > 0.0) {
    parallel_for(lambda.size(), [&](std::size_t j) {
      rep.residuals[j] = std::abs(interpolate_explicit(g, data, lambda[j]) - data[j]) / scale;
    }, 8);
  }
  rep.data_norm = std::sqrt(data_norm(lambda, km, data));
  const std::vector<std::vector<Complex>> one{std::vector<Complex>(data.begin(), data.end())};
  const auto& s = km.schedule();
  const auto norms = basis_norms(
      s, [&](Complex z) { return interpolation_basis(g, z, 0.0); }, one,
      [&](std::size_t n) {
        return std::max(min_circle_points, static_cast<std::size_t>(std::ceil(16.0 / s.gap(n))));
      });
  rep.solution_norm = std::sqrt(norms[0]);
  return rep;
}

}  // namespace bergman
