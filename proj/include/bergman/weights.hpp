#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bergman/types.hpp"

namespace bergman {

enum class WeightKind { constant, standard_alpha, loglog, tabulated };

/// Piecewise-linear weight samples with tails integrated exactly. Past the
/// last sample the weight is held constant up to x = 1.
struct WeightTable {
  std::vector<double> x;
  std::vector<double> w;
  std::vector<double> tail_at;  // integral from x[i] to 1, before normalization
};

/// A normalized radial weight on [0, 1). Every weight is a base family raised
/// through the transform w -> (1-a) w T^{-a}; since that maps the tail T to
/// T^{1-a}, the whole chain is a single exponent on the base tail.
class Weight {
 public:
  static Weight constant();
  static Weight standard_alpha(double alpha);
  static Weight loglog();
  /// Samples must start at x = 0, be strictly increasing, positive, and reach 1 - eta.
  static Weight tabulated(std::vector<std::pair<double, double>> samples, double eta = 1e-3);

  [[nodiscard]] double operator()(double x) const { return density_from_gap(1.0 - x); }
  [[nodiscard]] double tail(double x) const { return tail_from_gap(1.0 - x); }
  /// w(1 - t), accurate for tiny t.
  [[nodiscard]] double density_from_gap(double t) const;
  /// Integral of w over [1 - t, 1), accurate for tiny t.
  [[nodiscard]] double tail_from_gap(double t) const;
  /// Smallest gap at which the representation is trusted (table coverage);
  /// zero for closed-form families.
  [[nodiscard]] double trusted_gap() const noexcept;

  [[nodiscard]] WeightKind kind() const noexcept;
  /// Exponent p with tail = base_tail^p; 1 - p is the accumulated alpha.
  [[nodiscard]] double power() const noexcept { return power_; }
  [[nodiscard]] double normalization() const noexcept { return scale_; }
  [[nodiscard]] std::string describe() const;

  friend Weight alpha_transform(const Weight& w, double alpha);

 private:
  enum class Base { constant, loglog, table };
  Weight(Base b, double power) : base_(b), power_(power) {}
  [[nodiscard]] double base_density(double t) const;
  [[nodiscard]] double base_tail(double t) const;

  Base base_;
  double power_ = 1.0;
  double scale_ = 1.0;
  std::shared_ptr<const WeightTable> table_;
};

/// w_a(x) = (1 - a) w(x) T(x)^{-a}; tail becomes T^{1-a}. Requires a < 1.
[[nodiscard]] Weight alpha_transform(const Weight& w, double alpha);

/// Parses `constant`, `alpha:<float>`, `loglog`, `table:<csv path>`.
[[nodiscard]] Weight make_weight(std::string_view spec);
[[nodiscard]] Weight load_weight_table(const std::string& path, double eta = 1e-3);

struct DoublingReport {
  double c_min = 0.0;
  double worst_t = 0.0;
  std::size_t grid_size = 0;
  [[nodiscard]] bool passes() const noexcept { return c_min > 0.0; }
};

/// Samples w(1-t)/w(1-2t) on a geometric grid of t in (0, 1/2].
[[nodiscard]] DoublingReport check_doubling(const Weight& w, std::size_t grid_size);

struct AnnulusIndex {
  std::size_t n = 0;
  bool overflow = false;
};

/// Radii r_0 <= ... <= r_N with tail(r_n) = 2^{-n}. The gaps 1 - r_n are the
/// stored quantity; radii near 1 are not representable otherwise.
class RadiiSchedule {
 public:
  RadiiSchedule() = default;
  /// Direct construction from gaps 1 - r_n (nonincreasing, in (0, 1]).
  static RadiiSchedule from_gaps(std::vector<double> gaps, std::string weight_label = "explicit");

  [[nodiscard]] std::size_t size() const noexcept { return gaps_.empty() ? 0 : gaps_.size() - 1; }
  [[nodiscard]] double radius(std::size_t n) const { return radii_.at(n); }
  [[nodiscard]] double gap(std::size_t n) const { return gaps_.at(n); }
  [[nodiscard]] std::span<const double> radii() const noexcept { return radii_; }
  [[nodiscard]] std::span<const double> gaps() const noexcept { return gaps_; }
  [[nodiscard]] const std::string& weight_label() const noexcept { return label_; }

  [[nodiscard]] AnnulusIndex annulus_index(double modulus) const;
  [[nodiscard]] AnnulusIndex annulus_index(Complex z) const { return annulus_index(std::abs(z)); }

 private:
  std::vector<double> gaps_;
  std::vector<double> radii_;
  std::string label_;
};

[[nodiscard]] RadiiSchedule compute_radii(const Weight& w, std::size_t N, double tol = 1e-12);
[[nodiscard]] double radii_separation(const RadiiSchedule& s);

/// Default truncation: 14, or the largest N <= 9 with 1 - r_N > 1e-300 for loglog.
[[nodiscard]] std::size_t default_truncation(const Weight& w);

}  // namespace bergman
