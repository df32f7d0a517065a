#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "bergman/types.hpp"
#include "bergman/weights.hpp"

namespace bergman {

/// Pseudohyperbolic distance |z - w| / |1 - conj(w) z|.
[[nodiscard]] double rho(Complex z, Complex w);
/// The automorphism (a - z) / (1 - conj(a) z).
[[nodiscard]] Complex mobius(Complex a, Complex z);

inline constexpr double kDefaultSeparationDelta = 0.05;

/// Distinct points of the open disk. The separation infimum is computed on
/// first request and cached; everything else is fixed at construction.
class PointSequence {
 public:
  PointSequence();
  explicit PointSequence(std::vector<Complex> points, std::string origin = "explicit",
                         double delta_sep = kDefaultSeparationDelta);

  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
  [[nodiscard]] Complex operator[](std::size_t i) const { return points_[i]; }
  [[nodiscard]] std::span<const Complex> points() const noexcept { return points_; }
  [[nodiscard]] std::span<const double> re() const noexcept { return re_; }
  [[nodiscard]] std::span<const double> im() const noexcept { return im_; }
  [[nodiscard]] const std::string& origin() const noexcept { return origin_; }
  [[nodiscard]] double delta_sep() const noexcept { return delta_sep_; }

  /// inf over pairs of rho; +inf for fewer than two points.
  [[nodiscard]] double separation() const;
  [[nodiscard]] bool separated() const { return separation() >= delta_sep_; }

  [[nodiscard]] PointSequence rotated(double angle) const;
  [[nodiscard]] PointSequence merged(const PointSequence& other) const;
  [[nodiscard]] PointSequence subset(std::span<const std::size_t> indices) const;

 private:
  struct Cache {
    std::once_flag once;
    double separation = 0.0;
  };
  std::vector<Complex> points_;
  std::vector<double> re_;
  std::vector<double> im_;
  std::string origin_;
  double delta_sep_ = kDefaultSeparationDelta;
  std::shared_ptr<Cache> cache_;
};

/// Exact pairwise infimum of rho; near-linear for large sets by restricting
/// candidates to nearby dyadic levels and angular windows.
[[nodiscard]] double compute_separation(std::span<const Complex> pts);

/// sum_j log rho(z, lambda_j); -inf when z is a zero.
[[nodiscard]] double blaschke_log(const PointSequence& zeros, Complex z);

struct JensenResult {
  double residual = 0.0;
  double quadrature_mean = 0.0;
  double closed_form = 0.0;
  bool divergence_flag = false;
};

/// Compares the circle mean of log|B(re^{it})| (trapezoid with quad_points
/// nodes) against sum_j log max(r, |lambda_j|).
[[nodiscard]] JensenResult jensen_check(const PointSequence& zeros, double r, std::size_t quad_points);

/// Symmetric Carleson box: |zeta| < |z| < 1 and |arg(z conj(zeta))| < 1 - |zeta|.
[[nodiscard]] bool in_carleson_square(Complex zeta, Complex z);

struct LatticeOptions {
  std::size_t max_points = 1'000'000;
  /// Last circle index used; defaults to N.
  std::size_t max_circle = static_cast<std::size_t>(-1);
  std::size_t min_circle = 0;
  double phase_offset = 0.0;
  double delta_sep = kDefaultSeparationDelta;
};

/// Points per circle for generate_circle_lattice.
[[nodiscard]] std::size_t lattice_circle_count(const RadiiSchedule& s, std::size_t n, double spacing);

/// On each circle r_n with n a multiple of stride, K_n equally spaced points,
/// phases rotated by the golden angle from circle to circle.
[[nodiscard]] PointSequence generate_circle_lattice(const RadiiSchedule& s, double spacing,
                                                    std::size_t stride,
                                                    const LatticeOptions& opt = {});

}  // namespace bergman
