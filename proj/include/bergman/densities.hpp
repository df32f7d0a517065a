#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bergman/geometry.hpp"
#include "bergman/weights.hpp"

namespace bergman {

enum class AnchorKind { points, grid };

struct DensityOptions {
  std::size_t m_min = 1;
  std::size_t m_max = 10;
  AnchorKind anchors = AnchorKind::points;
  /// Keep the j = l term when the anchor is itself a sequence point.
  bool include_self = true;
  std::size_t grid_radial = 64;
  std::size_t grid_angular = 128;
};

[[nodiscard]] std::size_t default_m_max(const RadiiSchedule& s);

struct DensityRow {
  std::size_t m = 0;
  double sup_value = 0.0;  // sup over anchors of partial_sum / m
  double inf_value = 0.0;
};

struct DensityReport {
  std::vector<DensityRow> per_m;
  std::size_t m_min = 0;
  std::size_t m_max = 0;
  double d_plus_est = 0.0;   // max of sup_value over m in [ceil(m_max/2), m_max]
  double d_minus_est = 0.0;  // min of inf_value over the same window
  /// Least-squares slope of the window values (sup for upper, inf for lower).
  double slope = 0.0;
  /// Growth of the extreme raw sum across the window, per unit m.
  double increment_est = 0.0;
  std::size_t anchors_used = 0;
  std::size_t max_anchor_index = 0;
  AnchorKind anchor_kind = AnchorKind::points;
  bool closed_cutoff = true;
};

/// sum over |lambda_j| <= r_{n(z)+m} (closed) or < (open) of 1 - rho(z, lambda_j).
[[nodiscard]] double partial_sum(const PointSequence& lambda, Complex z, std::size_t m,
                                 const RadiiSchedule& s, bool closed);

/// Closed-cutoff sums; anchors at sequence points by default.
[[nodiscard]] DensityReport upper_density(const PointSequence& lambda, const RadiiSchedule& s,
                                          const DensityOptions& opt);
/// Open-cutoff sums over grid anchors.
[[nodiscard]] DensityReport lower_density(const PointSequence& lambda, const RadiiSchedule& s,
                                          DensityOptions opt);

struct ClassifyConfig {
  DensityOptions density;
  double margin = 0.02;
};

struct Classification {
  bool separated = false;
  double separation = 0.0;
  double d_plus = 0.0;
  double d_minus = 0.0;
  bool d_plus_finite = true;
  bool interp_candidate = false;
  bool sampling_candidate = false;
  DensityReport upper;
  DensityReport lower;
};

[[nodiscard]] Classification classify(const PointSequence& lambda, const RadiiSchedule& s,
                                      const ClassifyConfig& cfg);

}  // namespace bergman
