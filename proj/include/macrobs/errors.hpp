#pragma once

#include <stdexcept>
#include <string>

namespace macrobs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the inputs does not hold (bad normalization,
/// dimension mismatch, unknown letter, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A configured size cap would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// The state and the measurement refer to different eigenbases.
class BasisMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Conditioning on an outcome that has zero probability density.
class ZeroProbabilityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace macrobs
