#pragma once

#include <stdexcept>
#include <string>

namespace cbl {

/// Invalid user-supplied parameters or input data. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear solve that failed or whose residual is out of tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested model exceeds what can be enumerated.
class CapacityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Caller broke a precondition (programming error, not bad input).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void expects(bool condition, const char* what) {
  if (!condition) throw ContractViolation(what);
}

}  // namespace cbl
