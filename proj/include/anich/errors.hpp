#pragma once

#include <stdexcept>
#include <string>

namespace anich {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: invalid grid, parameters, or configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Configuration file problems. Carries the offending line when known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Anything that goes wrong while integrating in time.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonPositiveRadicand : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DenominatorDegenerate : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NewtonDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RatioViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularOperator : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotMeanZero : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Solution blew up (NaN or huge values).
class Diverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace anich
