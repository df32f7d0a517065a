#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bergman/construction.hpp"
#include "bergman/geometry.hpp"
#include "bergman/space.hpp"
#include "bergman/types.hpp"

namespace bergman {

using ComplexMatrix = Eigen::MatrixXcd;

struct GramMatrix {
  ComplexMatrix matrix;
  bool tail_flag = false;
};

/// K(lambda_j, lambda_l) / sqrt(K(lambda_j, lambda_j) K(lambda_l, lambda_l)).
[[nodiscard]] GramMatrix normalized_gram(const PointSequence& lambda, const KernelModel& km);

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

/// Extreme eigenvalues of a Hermitian matrix; throws NumericalGuardError on failure.
[[nodiscard]] EigenRange hermitian_extremes(const ComplexMatrix& m);

struct InterpolationCertificate {
  double min_eig = 0.0;
  double max_eig = 0.0;
  double separation = 0.0;
  bool separated = false;
  bool verdict = false;
  bool tail_flag = false;
};

[[nodiscard]] InterpolationCertificate interpolation_certificate(const PointSequence& lambda, const KernelModel& km,
                                                                 double threshold = 1e-3);

/// M_{kk'} = sum_j e_k(lambda_j) conj(e_k'(lambda_j)) / K(lambda_j, lambda_j), e_k = z^k / sqrt(c_k),
/// k, k' <= D. Points on equally spaced rings are summed in closed form.
[[nodiscard]] ComplexMatrix frame_matrix(const PointSequence& lambda, const KernelModel& km, std::size_t D);

struct FrameBounds {
  double A = 0.0;
  double B = 0.0;
  std::size_t degree = 0;
  bool tail_flag = false;
};

[[nodiscard]] FrameBounds frame_bounds(const PointSequence& lambda, const KernelModel& km, std::size_t D);

struct FrameLadder {
  std::vector<FrameBounds> steps;
  /// Relative change of A over the last doubling.
  double last_change = 0.0;
  bool plateau = false;
};

/// Frame bounds at degrees D_0, 2 D_0, ..., up to D_max; plateau when the
/// relative change of A across the last `doublings` doublings stays below tol.
[[nodiscard]] FrameLadder frame_ladder(const PointSequence& lambda, const KernelModel& km, std::size_t D0,
                                       std::size_t D_max, double tol = 0.05, std::size_t doublings = 1);

/// sum |a_j|^2 / K(lambda_j, lambda_j).
[[nodiscard]] double data_norm(const PointSequence& lambda, const KernelModel& km, std::span<const Complex> a);
/// sum |a_j|^2 (1 - |lambda_j|) 2^{-n(lambda_j)}.
[[nodiscard]] double data_norm_surrogate(const PointSequence& lambda, const RadiiSchedule& s,
                                         std::span<const Complex> a);

/// b_j(z) with f(z) = sum_j a_j b_j(z) the explicit interpolation operator
/// b_j(z) = G(z) / ((z - lambda_j) G'(lambda_j)) (1 - |lambda_j|^2) / (1 - conj(lambda_j) z).
[[nodiscard]] std::vector<Complex> interpolation_basis(const GModel& g, Complex z, double delta_eval = 0.05);
[[nodiscard]] Complex interpolate_explicit(const GModel& g, std::span<const Complex> a, Complex z,
                                           double delta_eval = 0.05);

/// b_j(z) = G(z) / ((z - lambda_j) G'(lambda_j)) (1 - |z|^2) / (1 - conj(z) lambda_j).
[[nodiscard]] std::vector<Complex> sampling_basis(const GModel& g, Complex z, double delta_eval = 0.05);
[[nodiscard]] Complex sampling_reconstruct(const GModel& g, std::span<const Complex> samples, Complex z,
                                           double delta_eval = 0.05);

/// Circle-sum norms of several functions f_i = sum_j data_i[j] b_j sharing one
/// quadrature; `points_for_circle(n)` nodes on r_n.
[[nodiscard]] std::vector<double> basis_norms(const RadiiSchedule& s,
                                              const std::function<std::vector<Complex>(Complex)>& basis,
                                              std::span<const std::vector<Complex>> data,
                                              const std::function<std::size_t(std::size_t)>& points_for_circle);

/// 1 / (1 - conj(lambda_l) z) times the Blaschke product over lambda_j != lambda_l,
/// |lambda_j| <= r_{n(lambda_l) + m}.
class NecessityTestFunction {
 public:
  NecessityTestFunction(Complex lambda_l, std::vector<Complex> zeros);
  [[nodiscard]] Complex operator()(Complex z) const;
  [[nodiscard]] Complex anchor() const noexcept { return anchor_; }
  [[nodiscard]] const std::vector<Complex>& zeros() const noexcept { return zeros_; }

 private:
  Complex anchor_;
  std::vector<Complex> zeros_;
};

[[nodiscard]] NecessityTestFunction necessity_test_function(const PointSequence& lambda, const RadiiSchedule& s,
                                                            std::size_t l, std::size_t m);

struct NecessityCheck {
  double lhs = 0.0;   // |f(lambda_l)|^2 (1 - |lambda_l|) 2^{-n(lambda_l)}
  double norm2 = 0.0;  // ||f||^2
  [[nodiscard]] double ratio() const noexcept { return lhs / norm2; }
};

[[nodiscard]] NecessityCheck necessity_check(const PointSequence& lambda, const RadiiSchedule& s, std::size_t l,
                                             std::size_t m, std::size_t min_circle_points = 256);

struct CertificationReport {
  double gram_min_eig = 0.0;
  double gram_max_eig = 0.0;
  double frame_A = 0.0;
  double frame_B = 0.0;
  std::size_t degree_used = 0;
  std::vector<double> residuals;
  double data_norm = 0.0;
  double solution_norm = 0.0;
  bool separated = false;
  double separation = 0.0;
  bool tail_flag = false;
};

[[nodiscard]] CertificationReport certify(const PointSequence& lambda, const KernelModel& km, std::size_t D);
/// Adds the explicit interpolation operator of a case I model applied to
/// `data`: node residuals relative to max |a_j|, the data norm and the
/// circle-sum norm of the solution (both as norms, not squares).
[[nodiscard]] CertificationReport certify(const PointSequence& lambda, const KernelModel& km, std::size_t D,
                                          const GModel& g, std::span<const Complex> data,
                                          std::size_t min_circle_points = 256);

}  // namespace bergman
