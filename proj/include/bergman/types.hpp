#pragma once

#include <complex>
#include <numbers>

namespace bergman {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kLog2 = std::numbers::ln2;
/// The Theorem-level density threshold (log 2)/2.
inline constexpr double kDensityThreshold = 0.5 * std::numbers::ln2;
inline constexpr double kGoldenAngle = kPi * (3.0 - 2.23606797749978969641);

}  // namespace bergman
