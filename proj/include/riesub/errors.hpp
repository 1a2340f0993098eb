#pragma once

#include <stdexcept>
#include <string>

namespace riesub {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Rank-deficient input where a full-rank factor is required.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Invalid user configuration (stepsizes, lambda, sizes, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input point violates the feasibility tolerance of its manifold.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

// Starting point outside the region where a guarantee applies.
class OutOfBasinError : public Error {
 public:
  using Error::Error;
};

// Non-finite value or divergence detected during an iteration.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

}  // namespace riesub
