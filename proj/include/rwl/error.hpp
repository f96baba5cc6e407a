#pragma once

#include <stdexcept>
#include <string>

namespace rwl {

// Precondition on the shape of the problem (dimension, depth, axis, scale).
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Input lies outside the subspace an operator is defined on
// (e.g. mass on the hyperplane k_i0 = 0 for the inverse Riesz transform).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Non-finite samples, mismatched grids, malformed files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operator misbehaves under the norm engine (non-linear, identically zero).
struct OperatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rwl
