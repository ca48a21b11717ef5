#pragma once

#include <stdexcept>

namespace cvx {

// Thrown when a requested discretization exceeds a configured budget
// (node count, constraint row count).
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a cost model or integrand is evaluated outside the region
// where it is defined (e.g. sqrt cost at a nonnegative slope).
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cvx
