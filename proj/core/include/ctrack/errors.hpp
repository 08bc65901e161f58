#pragma once

#include <stdexcept>
#include <string>

namespace ctrack {

/// Invalid input: malformed files, out-of-range timestamps, bad configuration.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Timestamp outside the evaluable domain of a trajectory.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Input data that cannot define the requested quantity (e.g. collinear point cloud).
class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Failures of the numerics themselves.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Logarithm requested on a rotation at (or numerically at) angle pi.
class BranchError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Normal equations that cannot be factorized reliably.
class SingularSystemError : public NumericalError {
 public:
  SingularSystemError(const std::string& what, double rcond)
      : NumericalError(what), rcond_(rcond) {}

  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

}  // namespace ctrack
