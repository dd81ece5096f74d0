#pragma once

#include <stdexcept>
#include <string>

namespace extremal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (bad dimensions, non-finite entries,
/// precondition violations on user-supplied data).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be (strictly) positive definite is not.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to reach its target accuracy.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace extremal
