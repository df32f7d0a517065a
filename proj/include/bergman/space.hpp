#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bergman/types.hpp"
#include "bergman/weights.hpp"

namespace bergman {

struct KernelValue {
  Complex value;
  /// Rigorous bound on sum_{k>D} |w|^k / c_k for w = z conj(zeta).
  double tail_bound = 0.0;
  bool tail_flag = false;
};

/// Monomial norms c_k = sum_{n=1}^N 2^{-n} r_n^{2k}, k = 0..D, of the
/// circle-sum norm, and the kernel sum_k (z conj(zeta))^k / c_k.
class KernelModel {
 public:
  KernelModel(RadiiSchedule s, std::size_t degree, double tail_rel_tol = 1e-6);

  [[nodiscard]] const RadiiSchedule& schedule() const noexcept { return schedule_; }
  [[nodiscard]] std::size_t degree() const noexcept { return coeffs_.size() - 1; }
  [[nodiscard]] std::span<const double> coeffs() const noexcept { return coeffs_; }
  [[nodiscard]] std::span<const double> inv_coeffs() const noexcept { return inv_coeffs_; }
  [[nodiscard]] double coeff(std::size_t k) const { return coeffs_.at(k); }
  [[nodiscard]] double tail_rel_tol() const noexcept { return tail_rel_tol_; }

  /// Bound on the omitted tail at |w| = x, from c_k >= 2^{-n} r_n^{2k} for every n.
  [[nodiscard]] double tail_bound(double x) const;
  /// Number of terms beyond which the series at |w| <= x is below 1e-17
  /// relative; never more than D.
  [[nodiscard]] std::size_t effective_degree(double x) const;

  [[nodiscard]] KernelValue kernel(Complex z, Complex zeta) const;
  /// K(z, z) as a real number.
  [[nodiscard]] double diag(Complex z) const;
  /// out[i] = K(z_i, z_i).
  void diag_batch(std::span<const Complex> z, std::span<double> out) const;
  /// out[i] = K(z, zeta_i), chunked by modulus so each chunk uses only the
  /// terms it needs.
  void kernel_row(Complex z, std::span<const Complex> zeta, std::span<Complex> out) const;

 private:
  RadiiSchedule schedule_;
  std::vector<double> coeffs_;
  std::vector<double> inv_coeffs_;
  double tail_rel_tol_;
};

[[nodiscard]] KernelModel monomial_norms(const RadiiSchedule& s, std::size_t D);
/// max(600, ceil(12 / (1 - r_{N-2}))): the tail bound at r_{N-2} then clears
/// the default relative tolerance with room to spare.
[[nodiscard]] std::size_t default_degree(const RadiiSchedule& s);

[[nodiscard]] Complex poly_eval(std::span<const Complex> a, Complex z);
[[nodiscard]] double norm_poly(const KernelModel& km, std::span<const Complex> a);
/// sum_k a_k conj(b_k) c_k.
[[nodiscard]] Complex inner_product_poly(const KernelModel& km, std::span<const Complex> a,
                                         std::span<const Complex> b);
/// Taylor coefficients of z -> K(z, zeta) up to the model degree.
[[nodiscard]] std::vector<Complex> kernel_coefficients(const KernelModel& km, Complex zeta);

using AnalyticFn = std::function<Complex(Complex)>;

[[nodiscard]] double norm_fn_quadrature(const RadiiSchedule& s, const AnalyticFn& f,
                                        std::size_t circle_points);
[[nodiscard]] double norm_fn_quadrature(const RadiiSchedule& s, const AnalyticFn& f,
                                        const std::function<std::size_t(std::size_t)>& points_for_circle);
[[nodiscard]] Complex inner_product_quadrature(const RadiiSchedule& s, const AnalyticFn& f,
                                               const AnalyticFn& g, std::size_t circle_points);

/// Area-integral comparison norm int |f|^2 w(|z|) dA / pi, via exact monomial
/// moments by quadrature in the radial variable.
[[nodiscard]] double area_norm_poly(const Weight& w, std::span<const Complex> a,
                                    std::size_t radial_points = 4000);

/// Radial x angular grid, radii interpolated geometrically in 1 - r between
/// consecutive schedule radii, from 0 up to r_{max_index}.
[[nodiscard]] std::vector<Complex> radial_grid(const RadiiSchedule& s, std::size_t radial,
                                               std::size_t angular, std::size_t max_index);

[[nodiscard]] double diag_ratio(const KernelModel& km, Complex z);

struct DiagStats {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  Complex argmin;
  Complex argmax;
  bool tail_flag = false;
  std::size_t count = 0;
  [[nodiscard]] double spread() const noexcept { return max_ratio / min_ratio; }
};

/// Extremes of K(z,z)(1-|z|)2^{-n(z)} over the grid.
[[nodiscard]] DiagStats diag_ratio_stats(const KernelModel& km, std::span<const Complex> grid);

struct PolySample {
  std::vector<Complex> coeffs;
  Complex z;
};

/// max over samples of |p(z)|^2 (1-|z|) 2^{-n(z)} / ||p||^2.
[[nodiscard]] double pointwise_bound_check(const KernelModel& km, std::span<const PolySample> samples);

/// ||(1 - conj(zeta) z)^{-gamma}||^2 from its binomial series, up to the model degree.
[[nodiscard]] double test_function_norm(const KernelModel& km, Complex zeta, double gamma);

struct ProfileStats {
  double min = 0.0;
  double max = 0.0;
};

/// Extremes of ||f_zeta||^2 (1-|zeta|)^{2 gamma - 1} 2^{n(zeta)} over zetas.
[[nodiscard]] ProfileStats test_function_profile(const KernelModel& km, double gamma,
                                                 std::span<const Complex> zetas);

}  // namespace bergman
