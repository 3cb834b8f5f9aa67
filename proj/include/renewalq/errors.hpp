#pragma once

#include <stdexcept>
#include <string>

namespace renewalq {

/// Precondition violated by caller-supplied data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A normalized map was applied to an input whose image has (numerically)
/// zero trace. Signals a trajectory of measure zero.
class NullOutcome : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Implicit time step could not be resolved; a finer grid is required.
class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolvent became singular on a Laplace inversion contour node.
class ContourError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested operation is not defined for this model configuration.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace renewalq
