#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "bergman/densities.hpp"
#include "bergman/geometry.hpp"
#include "bergman/types.hpp"
#include "bergman/weights.hpp"

namespace bergman {

/// Index range [begin, end) of the sequence points whose annulus lies in
/// block j, i.e. n in [m j, m j + m - 1], when points are sorted by modulus.
struct BlockRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Points of a sequence sorted by modulus with per-annulus offsets, so a
/// block's zeros are one contiguous slice.
class BlockedSequence {
 public:
  BlockedSequence(const PointSequence& lambda, const RadiiSchedule& s);

  [[nodiscard]] BlockRange annuli(std::size_t n_lo, std::size_t n_hi) const;
  [[nodiscard]] BlockRange block(std::size_t j, std::size_t m) const { return annuli(m * j, m * j + m - 1); }
  [[nodiscard]] std::span<const double> re() const noexcept { return re_; }
  [[nodiscard]] std::span<const double> im() const noexcept { return im_; }
  [[nodiscard]] Complex point(std::size_t i) const { return {re_[i], im_[i]}; }
  [[nodiscard]] std::size_t size() const noexcept { return re_.size(); }
  /// sum over the slice of log rho(z, lambda).
  [[nodiscard]] double log_rho_sum(BlockRange r, Complex z) const;

 private:
  std::vector<double> re_;
  std::vector<double> im_;
  std::vector<std::size_t> annulus_start_;  // size N + 2
};

/// sum over annuli mj .. mj+m-1 of log|B_n(z)|.
[[nodiscard]] double block_potential_U(const PointSequence& lambda, const RadiiSchedule& s, std::size_t j,
                                       std::size_t m, Complex z);

/// Mean over nodes x w^k (w = e^{2 pi i/M}, |x| = r) of log rho(., a), in closed form.
[[nodiscard]] double trapezoid_log_rho_mean(Complex x, std::size_t M, Complex a);

/// Samples of a potential on |z| = r at M nodes t_k = theta0 + 2 pi k / M, plus
/// the log singularities it carries (zeros), so that integrals against it can be
/// corrected for the trapezoid error near each zero.
class CircleSampler {
 public:
  /// U = block potential of the given zeros.
  CircleSampler(std::span<const Complex> zeros, double r, std::size_t M, double theta0 = 0.0);
  /// U = arbitrary smooth function (no singular corrections).
  CircleSampler(const std::function<double(Complex)>& u, double r, std::size_t M, double theta0 = 0.0);

  [[nodiscard]] double radius() const noexcept { return r_; }
  [[nodiscard]] std::size_t nodes() const noexcept { return samples_.size(); }
  [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
  [[nodiscard]] double theta0() const noexcept { return theta0_; }
  /// U at an arbitrary point of the circle, evaluated directly.
  [[nodiscard]] double value_at(double t) const;
  /// Corrected quadrature of int_0^{2 pi} F(t) U(r e^{it}) dt for
  /// F(t) = log rho(z, r e^{it}).
  [[nodiscard]] double integrate_against_log_rho(Complex z) const;
  /// Corrected quadrature of int U dt.
  [[nodiscard]] double integral() const;

 private:
  [[nodiscard]] double smooth_value_at(double t) const;

  double r_;
  double theta0_;
  std::vector<double> samples_;
  std::vector<Complex> zeros_;
  std::vector<double> zero_errors_;  // exact minus trapezoid integral of log rho(., lambda)
  std::function<double(Complex)> fn_;
};

[[nodiscard]] std::size_t default_quad_points(double r, std::size_t factor = 1);

/// V(z) = -(1/(pi(1-r^2))) int log rho(z, r e^{it}) U(r e^{it}) dt.
[[nodiscard]] double balayage_V(const CircleSampler& u, Complex z, double delta_eval = 0.05);

/// Riesz mass of V in zero-count units: -(1/(pi(1-r^2))) int U dt.
[[nodiscard]] double balayage_mass(const CircleSampler& u);

struct RedistributionResult {
  double C = 0.0;          // max over grid of |sum_j (V_j - U_j)|
  Complex argmax;
  std::size_t blocks = 0;
  std::size_t grid_points = 0;
};

/// Grid restricted to rho(z, lambda) >= delta and rho(z, circle r_mj) >= delta.
[[nodiscard]] std::vector<Complex> redistribution_grid(const PointSequence& lambda, const RadiiSchedule& s,
                                                       std::size_t m, std::size_t radial, std::size_t angular,
                                                       std::size_t max_index, double delta);

[[nodiscard]] RedistributionResult redistribution_error(const PointSequence& lambda, const RadiiSchedule& s,
                                                        std::size_t m, std::span<const Complex> grid, double delta,
                                                        std::size_t quad_factor = 1);

struct DrValue {
  double definition = 0.0;
  double factored = 0.0;
  bool agree = false;
};

[[nodiscard]] DrValue dr_cancellation(Complex z, double r);
/// sum over schedule circles r_{mj} > |z| of |D_{r_mj}(z)|.
[[nodiscard]] double dr_schedule_sum(const RadiiSchedule& s, Complex z, std::size_t m = 1);

/// Riesz mass per circle r_mj (zero-count units) of the potential tracking n(z)(log 2)/2.
[[nodiscard]] double nz_circle_mass(const RadiiSchedule& s, std::size_t m, std::size_t j);
/// P(z) = sum_{j >= 1} a_j log+(|z| / r_mj), from the exact circle-mean identity.
[[nodiscard]] double nz_potential(const RadiiSchedule& s, std::size_t m, Complex z);
/// Same sum with each circle mean computed by the trapezoid rule (for testing the identity).
[[nodiscard]] double nz_potential_quadrature(const RadiiSchedule& s, std::size_t m, Complex z, std::size_t quad_points);

struct AtomizeResult {
  std::vector<Complex> points;
  std::size_t count = 0;
  double remainder = 0.0;
};

/// floor(mass / 2 pi) equally spaced points; the rest is returned as remainder.
[[nodiscard]] AtomizeResult atomize(double r, double total_riesz_mass, double phase);

enum class GCase { interpolation, sampling };

struct AtomCircle {
  std::size_t block = 0;
  double radius = 0.0;
  double gap = 0.0;  // 1 - radius
  std::size_t count = 0;
  double phase = 0.0;
  int sign = 1;  // +1 zeros, -1 poles
  double target = 0.0;      // signed count before flooring
  double block_mass = 0.0;  // balayage mass nu_j
  double n_mass = 0.0;      // a_j
  double remainder = 0.0;
  double min_rho_to_lambda = 1.0;
  bool shifted = false;  // placed between schedule circles to stay clear of the sequence
  [[nodiscard]] Complex atom(std::size_t k) const {
    return std::polar(radius, phase + kTwoPi * static_cast<double>(k) / static_cast<double>(count));
  }
};

/// Zeros Lambda (and, in the interpolation case, extra atom zeros) with atom
/// poles in the sampling case. Evaluation is by exact factors.
class GModel {
 public:
  GModel(GCase kind, PointSequence lambda, RadiiSchedule s, std::vector<AtomCircle> circles, double epsilon,
         std::size_t m);

  [[nodiscard]] GCase kind() const noexcept { return kind_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  [[nodiscard]] std::size_t m() const noexcept { return m_; }
  [[nodiscard]] const PointSequence& lambda() const noexcept { return lambda_; }
  [[nodiscard]] const RadiiSchedule& schedule() const noexcept { return schedule_; }
  [[nodiscard]] const std::vector<AtomCircle>& circles() const noexcept { return circles_; }

  [[nodiscard]] std::vector<Complex> atom_zeros() const;
  [[nodiscard]] std::vector<Complex> poles() const;
  [[nodiscard]] std::size_t zero_count() const noexcept;
  [[nodiscard]] std::size_t pole_count() const noexcept;

  [[nodiscard]] double log_abs(Complex z) const;
  /// log G(z) modulo 2 pi i; real part -inf at a zero.
  [[nodiscard]] Complex log_value(Complex z) const;
  /// log of the atom-circle part H (or 1/H in the sampling case).
  [[nodiscard]] Complex log_atoms(Complex z) const;
  /// log G'(lambda_j) by differentiating the vanishing factor.
  [[nodiscard]] Complex log_derivative_at(std::size_t j) const;
  /// log G'(lambda_j) for every j, computed once and shared between copies.
  [[nodiscard]] const std::vector<Complex>& log_derivatives() const;
  /// log of G(z) / (z - lambda_j) with the vanishing factor removed exactly.
  [[nodiscard]] Complex log_quotient(Complex z, std::size_t j) const;

  /// min over the zero set (Lambda and atom zeros) of rho(z, .).
  [[nodiscard]] double rho_to_zeros(Complex z) const;
  [[nodiscard]] double rho_to_poles(Complex z) const;
  [[nodiscard]] double rho_to_lambda(Complex z) const;
  [[nodiscard]] double rho_to_atom_zeros(Complex z) const { return rho_to_circles(z, +1); }

 private:
  [[nodiscard]] double rho_to_circles(Complex z, int sign) const;

  GCase kind_;
  PointSequence lambda_;
  RadiiSchedule schedule_;
  std::vector<AtomCircle> circles_;
  double epsilon_;
  std::size_t m_;
  std::vector<double> sorted_mod_;
  std::vector<double> sorted_re_;
  std::vector<double> sorted_im_;
  struct DerivativeCache {
    std::once_flag once;
    std::vector<Complex> values;
  };
  std::shared_ptr<DerivativeCache> derivatives_ = std::make_shared<DerivativeCache>();
};

struct BuildOptions {
  GCase kind = GCase::interpolation;
  std::optional<double> epsilon;
  std::optional<std::size_t> m;
  std::size_t m_cap = 12;
  std::size_t block_samples = 256;
  /// Balayage masses by corrected quadrature with this node multiplier; 0 uses the closed form.
  std::size_t quad_factor = 1;
  std::size_t phase_candidates = 16;
  double phase_offset = 0.0;
  double delta = 0.05;
  bool randomize_phase = false;
  std::uint64_t seed = 0;
  std::size_t max_shrink = 6;
  /// Measured densities; computed with `density` when absent.
  std::optional<double> d_plus;
  std::optional<double> d_minus;
  DensityOptions density;
};

/// Closed form of the balayage mass of block j in zero-count units:
/// 2 sum log(1/max(r, |lambda|)) / (1 - r^2) over the block's zeros, r = r_mj.
[[nodiscard]] double block_riesz_count(const BlockedSequence& bs, const RadiiSchedule& s, std::size_t j,
                                       std::size_t m);

struct BlockCheck {
  std::size_t j = 0;
  double extreme = 0.0;  // max (I) or min (S) of -U~_j over the samples
  double bound = 0.0;
  bool ok = true;
};

struct BuildReport {
  double d_plus = 0.0;
  double d_minus = 0.0;
  double epsilon_initial = 0.0;
  double epsilon = 0.0;
  std::size_t shrink_steps = 0;
  std::size_t m = 0;
  bool m_auto = false;
  bool block_condition_ok = false;
  std::vector<BlockCheck> checks;
  double min_pole_zero_rho = 1.0;   // min rho between atoms and Lambda
  double half_atom_spacing = 1.0;   // half the smallest rho between neighbouring atoms
  std::size_t negative_blocks = 0;  // blocks whose signed count was below zero (no atoms)
  std::size_t shifted_circles = 0;
};

/// The block condition on |z| = r_mj, sampled at `samples` points, with the
/// factor of the nearest zero dropped from U_j.
[[nodiscard]] std::vector<BlockCheck> block_condition(const BlockedSequence& bs, const RadiiSchedule& s, GCase kind,
                                                      double epsilon, std::size_t m, std::size_t samples);

[[nodiscard]] GModel build_G(const PointSequence& lambda, const RadiiSchedule& s, const BuildOptions& opt,
                             BuildReport* report = nullptr);

struct VerifyResult {
  double min_log_ratio = 0.0;
  double max_log_ratio = 0.0;
  std::size_t grid_points = 0;
  Complex argmin;
  Complex argmax;
  [[nodiscard]] double spread() const noexcept { return max_log_ratio - min_log_ratio; }
};

/// Grid points at rho-distance >= delta from every zero and pole of G.
[[nodiscard]] std::vector<Complex> guard_grid(const GModel& g, std::size_t radial, std::size_t angular,
                                              std::size_t max_index, double delta);

/// Extremes of 2 log|G| - (1 -/+ eps) n(z) log 2 - 2 log rho(z, zeros) + 2 log rho(z, poles).
[[nodiscard]] VerifyResult verify_G(const GModel& g, std::span<const Complex> grid, double delta);

}  // namespace bergman
