#pragma once

#include <stdexcept>
#include <string>

namespace socta {

/// Base class for all library errors. The CLI maps each subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data, bad configuration, or a violated precondition (exit code 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A required file or model artifact is absent or has the wrong version tag (exit code 2).
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// Divergence, singular matrices and other numerical breakdowns (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace socta
