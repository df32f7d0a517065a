#pragma once

#include <stdexcept>
#include <string>

namespace bergman {

/// Bad input: invalid parameters, malformed files, violated preconditions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical guard tripped: truncation tails, quadrature resolution,
/// evaluation too close to a singular point.
class NumericalGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bergman
